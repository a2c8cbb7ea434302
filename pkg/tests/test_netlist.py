import pytest

from rfpa.builtins import builtin_circuit, builtin_names
from rfpa.netlist import (Inductor, Mosfet, NetlistError, Resistor, VSource,
                          circuit_to_netlist, parse_netlist, parse_value,
                          validate_circuit)

VALID = """* exercise every line type
.model nch NMOS KP=200u VT0=0.5 LAMBDA=0.1 COX=8.5m CGDO=0.3n
V1 in 0 DC 1.8 AC 1 SIN(0.5 2.4G 0)
R1 in mid 14.5
C1 mid out 200f
L1 out 0 22n Q=20 FREF=2.4G
M1 drn mid 0 nch W=4.8u L=1u NF=16 M=12
RD vdd drn 1k
V2 vdd 0 DC 1.8
.port 1 in 0
.port 2 out 0 Z0=75
.supply V2
.end
"""


def test_parse_resistor_line():
    c = parse_netlist("R1 n1 0 14.5\n")
    comp = c.component("R1")
    assert isinstance(comp.kind, Resistor)
    assert comp.kind.resistance == 14.5
    assert comp.terminals == ("n1", "0")


def test_parse_inductor_with_q_and_fref():
    c = parse_netlist("L1 n2 n3 22n Q=20 FREF=2.4G\n")
    ind = c.component("L1").kind
    assert isinstance(ind, Inductor)
    assert ind.inductance == float("22e-9")
    assert ind.q == 20.0
    assert ind.f_ref == 2.4e9


def test_duplicate_id_rejected():
    with pytest.raises(NetlistError, match="duplicate"):
        parse_netlist("R1 n1 0 14.5\nR1 n2 0 1k\n")
    # case-insensitive uniqueness
    with pytest.raises(NetlistError, match="duplicate"):
        parse_netlist("R1 n1 0 14.5\nr1 n2 0 1k\n")


@pytest.mark.parametrize("token,value", [
    ("22n", 22e-9), ("22N", 22e-9), ("1f", 1e-15), ("3p", 3e-12),
    ("4.7u", 4.7e-6), ("15m", 15e-3), ("13k", 13e3), ("2Meg", 2e6),
    ("2MEG", 2e6), ("2.4G", 2.4e9), ("2.4g", 2.4e9), ("1e3", 1e3),
    ("-5.5", -5.5), (".5", 0.5), ("1e-3k", 1.0),
])
def test_unit_suffixes_exact(token, value):
    assert parse_value(token) == value


def test_suffix_full_precision():
    # suffixes combine into the decimal exponent before the single
    # string-to-double conversion
    assert parse_value("22n") == float("22e-9")
    assert parse_value("0.135") == 0.135


@pytest.mark.parametrize("bad", ["abc", "1x", "10kk", "--5", "1.2.3"])
def test_malformed_numbers(bad):
    with pytest.raises(ValueError):
        parse_value(bad)


def test_full_netlist_parses():
    c = parse_netlist(VALID, name="valid")
    assert [comp.id for comp in c.components] == \
        ["V1", "R1", "C1", "L1", "M1", "RD", "V2"]
    src = c.component("V1").kind
    assert isinstance(src, VSource)
    assert (src.dc, src.ac_mag) == (1.8, 1.0)
    assert src.sine.amplitude == 0.5 and src.sine.freq == 2.4e9
    mos = c.component("M1").kind
    assert isinstance(mos, Mosfet)
    assert mos.weff == pytest.approx(4.8e-6 * 16 * 12)
    assert mos.model.kp == 200e-6
    assert c.port(2).z0 == 75.0
    assert c.supplies == ("V2",)


def test_continuation_and_comments():
    c = parse_netlist("* leading comment\nR1 a 0\n+ 50\n")
    assert c.component("R1").kind.resistance == 50.0


def test_end_stops_parsing():
    c = parse_netlist("R1 a 0 50\n.end\nthis is not a netlist\n")
    assert len(c.components) == 1


def test_error_positions():
    with pytest.raises(NetlistError) as err:
        parse_netlist("R1 a 0 50\nX9 a b 5\n")
    assert err.value.line == 2
    assert "unknown component kind" in str(err.value)

    with pytest.raises(NetlistError) as err:
        parse_netlist("M1 d g s ghost W=1u L=1u\n")
    assert "undeclared model" in str(err.value)

    with pytest.raises(NetlistError) as err:
        parse_netlist("R1 a 0 50\nL1 a 0 5n Q=\n")
    assert err.value.line == 2


def test_every_field_removal_is_detected():
    """Dropping any required token from a valid line must fail with a
    diagnostic naming that line."""
    lines = [ln for ln in VALID.splitlines()
             if ln and not ln.startswith("*")]
    for idx, line in enumerate(lines):
        tokens = line.split()
        if len(tokens) < 2:
            continue
        mutated = lines.copy()
        mutated[idx] = " ".join(tokens[:-1])  # drop the last field
        text = "\n".join(mutated) + "\n"
        optional_tail = tokens[-1].split("=")[0] in (
            "Q", "FREF", "Z0", "NF", "M", "LAMBDA", "COX", "CGDO")
        try:
            parse_netlist(text)
        except NetlistError as exc:
            assert not optional_tail
            assert exc.line == idx + 1   # mutated text has no comment line
        else:
            # only optional parameters (or the bare .end) may drop silently
            assert optional_tail or mutated[idx] == ""


def test_round_trip_structural_identity():
    for name in ("driver_stage", "output_stage", "two_stage_pa",
                 "fixture_rc_step", "fixture_diode_mosfet"):
        original = builtin_circuit(name)
        text = circuit_to_netlist(original)
        again = parse_netlist(text, name=original.name)
        assert again == original


def test_serializer_rejects_fixture_only_kinds():
    with pytest.raises(ValueError, match="not representable"):
        circuit_to_netlist(builtin_circuit("fixture_cubic_amp"))


def test_validate_shipped_netlists_clean():
    for name in ("driver_stage", "output_stage", "two_stage_pa"):
        assert validate_circuit(builtin_circuit(name)) == []


def test_validate_floating_dc_node():
    c = parse_netlist("V1 a 0 DC 1\nC1 a b 1p\nC2 b 0 1p\n")
    diags = validate_circuit(c)
    assert any("floating DC node" in d.message and d.element == "b"
               for d in diags)


def test_validate_no_ground():
    c = parse_netlist("R1 a b 50\nV1 a b DC 1\n")
    diags = validate_circuit(c)
    assert any("no ground" in d.message for d in diags)


def test_validate_port_numbering():
    c = parse_netlist("R1 a 0 50\n.port 1 a 0\n.port 3 a 0\n")
    diags = validate_circuit(c)
    assert any("not consecutive" in d.message for d in diags)


def test_validate_supply_reference():
    c = parse_netlist("R1 a 0 50\n.supply VX\n")
    assert any("unknown component" in d.message
               for d in validate_circuit(c))
    c = parse_netlist("R1 a 0 50\n.supply R1\n")
    assert any("voltage source" in d.message for d in validate_circuit(c))


def test_builtin_driver_contains_table_values():
    c = builtin_circuit("driver_stage")
    assert c.component("R1").kind.resistance == 14.5
    assert c.component("R3").kind.resistance == 13e3
    l1 = c.component("L1").kind
    assert (l1.inductance, l1.q) == (22e-9, 20.0)
    l2 = c.component("L2").kind
    assert (l2.inductance, l2.q) == (15e-9, 20.0)
    assert c.component("C1").kind.capacitance == 200e-15
    assert c.component("C2").kind.capacitance == 10e-12
    q2 = c.component("MQ2").kind
    assert (q2.width, q2.length, q2.nf, q2.m) == (4.8e-6, 1e-6, 16, 12)
    q3 = c.component("MQ3").kind
    assert (q3.width, q3.length) == (0.3e-6, 1e-6)


def test_builtin_output_contains_table_values():
    c = builtin_circuit("output_stage")
    assert c.component("R2").kind.resistance == 22.2
    assert c.component("R5").kind.resistance == 7e3
    assert c.component("L3").kind.inductance == 15e-9
    assert c.component("L4").kind.inductance == 400e-9
    assert c.component("C6").kind.capacitance == 800e-15
    assert c.component("C7").kind.capacitance == 20e-12
    q4 = c.component("MQ4").kind
    assert (q4.width, q4.length, q4.nf, q4.m) == (4.8e-6, 3e-6, 16, 12)
    q5 = c.component("MQ5").kind
    assert (q5.width, q5.length) == (0.3e-6, 1.2e-6)


def test_builtin_two_stage_ports():
    c = builtin_circuit("two_stage_pa")
    assert validate_circuit(c) == []
    assert [p.number for p in c.ports] == [1, 2]
    assert c.port(2).z0 == 50.0


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin_circuit("nope")
    assert "two_stage_pa" in builtin_names()
