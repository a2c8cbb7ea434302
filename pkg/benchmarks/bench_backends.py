"""Compare the compiled transient kernel against the pure-numpy fallback.

The hot loop of this workbench is the periodic-steady-state integration
inside power sweeps, so the benchmark times exactly that: driven
steady-state runs of the shipped amplifier and one full compression sweep.

Run:  python benchmarks/bench_backends.py
"""

import time

import rfpa
from rfpa.largesignal import (_driven_circuit, dbm_to_w, power_sweep_p1db,
                              source_amplitude, steady_state)
from rfpa.mna import solve_dc
from rfpa._core import get_engine


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - start


def bench_steady_state(backend: str, pin_dbm: float) -> tuple[float, int]:
    pa = rfpa.builtin_circuit("two_stage_pa")
    driven, _, _ = _driven_circuit(
        pa, source_amplitude(dbm_to_w(pin_dbm), 50.0), 2.4e9)
    dc = solve_dc(driven)
    result, elapsed = timed(steady_state, driven, dc, 2.4e9,
                            dt_per_period=256, max_periods=2000,
                            backend=backend)
    assert result.converged_to_periodic
    return elapsed, result.periods_run


def bench_sweep(backend: str) -> float:
    pa = rfpa.builtin_circuit("two_stage_pa")
    _, elapsed = timed(power_sweep_p1db, pa, 2.4e9, -16.0, 8.0, 1.0,
                       backend=backend)
    return elapsed


def main() -> None:
    backends = ["python"]
    try:
        get_engine("compiled")
        backends.insert(0, "compiled")
    except ImportError:
        print("compiled kernel not built; benchmarking the fallback only")

    print(f"{'workload':38s}" + "".join(f"{b:>12s}" for b in backends)
          + f"{'speedup':>10s}" if len(backends) == 2 else "")
    rows = []
    for pin in (-10.0, 0.0):
        times = {}
        periods = 0
        for b in backends:
            times[b], periods = bench_steady_state(b, pin)
        rows.append((f"steady state @ {pin:+.0f} dBm ({periods} periods)",
                     times))
    sweep_times = {b: bench_sweep(b) for b in backends}
    rows.append(("full P1dB sweep (-16..+8 dBm)", sweep_times))

    for label, times in rows:
        line = f"{label:38s}"
        for b in backends:
            line += f"{times[b]:>10.2f} s"
        if len(backends) == 2:
            line += f"{times['python'] / times['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
