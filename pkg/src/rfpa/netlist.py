"""Circuit data model and the workbench's SPICE-flavored netlist dialect.

Grammar (one element per line, `*` starts a comment line, a leading `+`
continues the previous line, keywords are case-insensitive):

    R<id> n+ n- value
    C<id> n+ n- value
    L<id> n+ n- value [Q=q] [FREF=f]
    M<id> nd ng ns model W=w L=l [NF=i] [M=i]
    V<id> n+ n- [DC v] [AC mag] [SIN(amp freq phase)]
    .model <name> NMOS KP=... VT0=... [LAMBDA=...] [COX=...] [CGDO=...]
    .port <num> n+ n- [Z0=z]
    .supply V<id>
    .end

Values accept the unit suffixes f, p, n, u, m, k, Meg, G (exact powers of
ten).  Ground is the literal node "0".  Circuits are immutable after
construction and safe to share between concurrent analyses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .devices import MosfetModelCard

GROUND = "0"
DEFAULT_F_REF = 2.4e9


class NetlistError(ValueError):
    """Parse failure with source position."""

    def __init__(self, message: str, line: int | None = None,
                 column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)


# --------------------------------------------------------------------------
# component kinds

@dataclass(frozen=True)
class Resistor:
    resistance: float


@dataclass(frozen=True)
class Capacitor:
    capacitance: float


@dataclass(frozen=True)
class Inductor:
    inductance: float
    q: float | None = None          # None means lossless
    f_ref: float = DEFAULT_F_REF


@dataclass(frozen=True)
class Mosfet:
    model_name: str
    model: MosfetModelCard
    width: float
    length: float
    nf: int = 1
    m: int = 1

    @property
    def weff(self) -> float:
        """Total channel width W * NF * M."""
        return self.width * self.nf * self.m


@dataclass(frozen=True)
class SineSpec:
    amplitude: float
    freq: float
    phase: float = 0.0


@dataclass(frozen=True)
class VSource:
    dc: float = 0.0
    ac_mag: float = 0.0
    sine: SineSpec | None = None


@dataclass(frozen=True)
class PolyVcvs:
    """Memoryless polynomial controlled source: e = a1*vc + a3*vc^3.

    Built-in oracle fixtures only; not representable in the netlist dialect.
    Terminals are (out+, out-, ctrl+, ctrl-).
    """

    a1: float
    a3: float = 0.0


ComponentKind = Resistor | Capacitor | Inductor | Mosfet | VSource | PolyVcvs


@dataclass(frozen=True)
class Component:
    id: str
    kind: ComponentKind
    terminals: tuple[str, ...]


@dataclass(frozen=True)
class Port:
    number: int
    plus_node: str
    minus_node: str
    z0: float = 50.0


@dataclass(frozen=True)
class Circuit:
    name: str
    components: tuple[Component, ...]
    ports: tuple[Port, ...] = ()
    supplies: tuple[str, ...] = ()

    @property
    def nodes(self) -> frozenset[str]:
        out: set[str] = set()
        for comp in self.components:
            out.update(comp.terminals)
        return frozenset(out)

    def component(self, comp_id: str) -> Component:
        wanted = comp_id.lower()
        for comp in self.components:
            if comp.id.lower() == wanted:
                return comp
        raise KeyError(comp_id)

    def port(self, number: int) -> Port:
        for p in self.ports:
            if p.number == number:
                return p
        raise KeyError(number)

    def with_extras(self, components: tuple[Component, ...] = (),
                    ports: tuple[Port, ...] | None = None,
                    name: str | None = None) -> "Circuit":
        """Copy with extra components appended (used by analysis drivers)."""
        return Circuit(
            name=self.name if name is None else name,
            components=self.components + tuple(components),
            ports=self.ports if ports is None else ports,
            supplies=self.supplies,
        )


@dataclass(frozen=True)
class Diagnostic:
    severity: str                  # "error" or "warning"
    message: str
    element: str | None = None

    def __str__(self) -> str:
        where = f" [{self.element}]" if self.element else ""
        return f"{self.severity}: {self.message}{where}"


# --------------------------------------------------------------------------
# value parsing

_SUFFIX_EXPONENT = {
    "f": -15, "p": -12, "n": -9, "u": -6, "m": -3,
    "k": 3, "meg": 6, "g": 9,
}

_NUMBER_RE = re.compile(
    r"([+-]?(?:\d+\.?\d*|\.\d+))(?:[eE]([+-]?\d+))?([A-Za-z]+)?\Z")


def parse_value(token: str) -> float:
    """Parse a number with an optional unit suffix to SI.

    Suffixes scale by exact powers of ten: the digits and the combined
    decimal exponent are handed to float() in one shot, so "22n" is the
    correctly rounded double 22e-9.
    """
    m = _NUMBER_RE.match(token)
    if not m:
        raise ValueError(f"malformed number {token!r}")
    digits, exp_str, suffix = m.groups()
    exponent = int(exp_str) if exp_str else 0
    if suffix:
        key = suffix.lower()
        if key not in _SUFFIX_EXPONENT:
            raise ValueError(f"unknown unit suffix {suffix!r} in {token!r}")
        exponent += _SUFFIX_EXPONENT[key]
    return float(f"{digits}e{exponent}")


def format_value(value: float) -> str:
    """Shortest round-trip representation (no unit suffixes)."""
    return repr(float(value))


# --------------------------------------------------------------------------
# tokenizer

@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(r"\(|\)|=|[^\s()=]+")


def _tokenize(text: str) -> list[list[_Token]]:
    """Split source into logical statements of position-tagged tokens."""
    statements: list[list[_Token]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("*"):
            continue
        continuation = stripped.startswith("+")
        body = raw
        if continuation:
            plus_at = raw.index("+")
            body = raw[:plus_at] + " " + raw[plus_at + 1:]
        tokens = [
            _Token(m.group(0), lineno, m.start() + 1)
            for m in _TOKEN_RE.finditer(body)
        ]
        if not tokens:
            continue
        if continuation:
            if not statements:
                raise NetlistError("continuation line with nothing to continue",
                                   lineno, raw.index("+") + 1)
            statements[-1].extend(tokens)
        else:
            statements.append(tokens)
    return statements


class _Cursor:
    """Sequential token reader with positioned errors."""

    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def exhausted(self) -> bool:
        return self.i >= len(self.tokens)

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if not self.exhausted else None

    def take(self, what: str) -> _Token:
        if self.exhausted:
            last = self.tokens[-1]
            raise NetlistError(f"missing {what}", last.line,
                               last.column + len(last.text))
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def take_value(self, what: str) -> float:
        tok = self.take(what)
        try:
            return parse_value(tok.text)
        except ValueError as exc:
            raise NetlistError(f"bad {what}: {exc}", tok.line, tok.column)

    def expect(self, literal: str) -> _Token:
        tok = self.take(f"{literal!r}")
        if tok.text != literal:
            raise NetlistError(f"expected {literal!r}, got {tok.text!r}",
                               tok.line, tok.column)
        return tok

    def fail(self, message: str) -> NetlistError:
        tok = self.peek() or self.tokens[-1]
        return NetlistError(message, tok.line, tok.column)


def _keyword_params(cur: _Cursor, allowed: dict[str, str]) -> dict[str, float]:
    """Consume trailing KEY=value pairs; `allowed` maps upper key -> label."""
    out: dict[str, float] = {}
    while not cur.exhausted:
        tok = cur.take("parameter")
        key = tok.text.upper()
        if key not in allowed:
            raise NetlistError(f"unknown parameter {tok.text!r}",
                               tok.line, tok.column)
        if key in out:
            raise NetlistError(f"duplicate parameter {tok.text!r}",
                               tok.line, tok.column)
        cur.expect("=")
        out[key] = cur.take_value(allowed[key])
    return out


# --------------------------------------------------------------------------
# parser

def parse_netlist(text: str, name: str = "circuit") -> Circuit:
    """Parse netlist source into a Circuit.

    Components keep their source order.  Raises NetlistError with line and
    column on the first syntax problem; semantic problems (duplicate ids,
    undeclared models) are also reported with the offending location.
    """
    statements = _tokenize(text)

    models: dict[str, MosfetModelCard] = {}
    components: list[Component] = []
    ports: list[Port] = []
    supplies: list[str] = []
    seen_ids: dict[str, _Token] = {}
    pending_mosfets: list[tuple[int, str, _Token]] = []  # index, model, token
    ended = False

    for tokens in statements:
        if ended:
            break
        cur = _Cursor(tokens)
        head = cur.take("element")
        lead = head.text[0]

        if lead == ".":
            directive = head.text.lower()
            if directive == ".end":
                ended = True
            elif directive == ".model":
                _parse_model(cur, models)
            elif directive == ".port":
                ports.append(_parse_port(cur))
            elif directive == ".supply":
                tok = cur.take("supply component id")
                supplies.append(tok.text)
                _ensure_done(cur)
            else:
                raise NetlistError(f"unknown directive {head.text!r}",
                                   head.line, head.column)
            continue

        kind_letter = lead.upper()
        if kind_letter not in "RCLMV":
            raise NetlistError(f"unknown component kind {head.text!r}",
                               head.line, head.column)
        comp_id = head.text
        key = comp_id.lower()
        if key in seen_ids:
            first = seen_ids[key]
            raise NetlistError(
                f"duplicate component id {comp_id!r} "
                f"(first defined at line {first.line})",
                head.line, head.column)
        seen_ids[key] = head

        if kind_letter == "R":
            n1, n2 = cur.take("node").text, cur.take("node").text
            value = cur.take_value("resistance")
            _ensure_done(cur)
            components.append(Component(comp_id, Resistor(value), (n1, n2)))
        elif kind_letter == "C":
            n1, n2 = cur.take("node").text, cur.take("node").text
            value = cur.take_value("capacitance")
            _ensure_done(cur)
            components.append(Component(comp_id, Capacitor(value), (n1, n2)))
        elif kind_letter == "L":
            n1, n2 = cur.take("node").text, cur.take("node").text
            value = cur.take_value("inductance")
            params = _keyword_params(cur, {"Q": "quality factor",
                                           "FREF": "reference frequency"})
            ind = Inductor(value, q=params.get("Q"),
                           f_ref=params.get("FREF", DEFAULT_F_REF))
            components.append(Component(comp_id, ind, (n1, n2)))
        elif kind_letter == "M":
            nd = cur.take("drain node").text
            ng = cur.take("gate node").text
            ns = cur.take("source node").text
            model_tok = cur.take("model name")
            params = _keyword_params(cur, {"W": "width", "L": "length",
                                           "NF": "finger count",
                                           "M": "multiplier"})
            for required in ("W", "L"):
                if required not in params:
                    raise NetlistError(f"MOSFET {comp_id} missing {required}=",
                                       head.line, head.column)
            pending_mosfets.append((len(components), model_tok.text, model_tok))
            placeholder = Mosfet(model_name=model_tok.text, model=None,  # type: ignore[arg-type]
                                 width=params["W"], length=params["L"],
                                 nf=int(params.get("NF", 1)),
                                 m=int(params.get("M", 1)))
            components.append(Component(comp_id, placeholder, (nd, ng, ns)))
        else:  # V
            n1, n2 = cur.take("node").text, cur.take("node").text
            components.append(Component(comp_id, _parse_vsource(cur), (n1, n2)))

    circuit_models = {k.lower(): v for k, v in models.items()}
    resolved = list(components)
    for idx, model_name, tok in pending_mosfets:
        card = circuit_models.get(model_name.lower())
        if card is None:
            raise NetlistError(f"undeclared model reference {model_name!r}",
                               tok.line, tok.column)
        comp = resolved[idx]
        mos = comp.kind
        resolved[idx] = Component(
            comp.id,
            Mosfet(model_name=model_name, model=card, width=mos.width,
                   length=mos.length, nf=mos.nf, m=mos.m),
            comp.terminals)

    _check_positive(resolved)
    return Circuit(name=name, components=tuple(resolved),
                   ports=tuple(ports), supplies=tuple(supplies))


def _ensure_done(cur: _Cursor) -> None:
    if not cur.exhausted:
        tok = cur.peek()
        raise NetlistError(f"unexpected trailing token {tok.text!r}",
                           tok.line, tok.column)


def _parse_model(cur: _Cursor, models: dict[str, MosfetModelCard]) -> None:
    name_tok = cur.take("model name")
    type_tok = cur.take("model type")
    if type_tok.text.upper() != "NMOS":
        raise NetlistError(f"unsupported model type {type_tok.text!r}",
                           type_tok.line, type_tok.column)
    params = _keyword_params(cur, {"KP": "KP", "VT0": "VT0",
                                   "LAMBDA": "LAMBDA", "COX": "COX",
                                   "CGDO": "CGDO"})
    for required in ("KP", "VT0"):
        if required not in params:
            raise NetlistError(f"model {name_tok.text} missing {required}=",
                               name_tok.line, name_tok.column)
    if name_tok.text.lower() in models:
        raise NetlistError(f"duplicate model {name_tok.text!r}",
                           name_tok.line, name_tok.column)
    try:
        card = MosfetModelCard(kp=params["KP"], vt0=params["VT0"],
                               lam=params.get("LAMBDA", 0.0),
                               cox=params.get("COX", 0.0),
                               cgdo=params.get("CGDO", 0.0))
    except ValueError as exc:
        raise NetlistError(str(exc), name_tok.line, name_tok.column)
    models[name_tok.text.lower()] = card


def _parse_port(cur: _Cursor) -> Port:
    num_tok = cur.take("port number")
    try:
        number = int(num_tok.text)
    except ValueError:
        raise NetlistError(f"bad port number {num_tok.text!r}",
                           num_tok.line, num_tok.column)
    plus = cur.take("node").text
    minus = cur.take("node").text
    params = _keyword_params(cur, {"Z0": "reference impedance"})
    return Port(number=number, plus_node=plus, minus_node=minus,
                z0=params.get("Z0", 50.0))


def _parse_vsource(cur: _Cursor) -> VSource:
    dc = 0.0
    ac_mag = 0.0
    sine: SineSpec | None = None
    while not cur.exhausted:
        tok = cur.take("source parameter")
        word = tok.text.upper()
        if word == "DC":
            dc = cur.take_value("DC value")
        elif word == "AC":
            ac_mag = cur.take_value("AC magnitude")
        elif word == "SIN":
            cur.expect("(")
            amp = cur.take_value("sine amplitude")
            freq = cur.take_value("sine frequency")
            phase = cur.take_value("sine phase")
            cur.expect(")")
            sine = SineSpec(amplitude=amp, freq=freq, phase=phase)
        else:
            raise NetlistError(f"unknown source parameter {tok.text!r}",
                               tok.line, tok.column)
    return VSource(dc=dc, ac_mag=ac_mag, sine=sine)


def _check_positive(components: list[Component]) -> None:
    for comp in components:
        kind = comp.kind
        bad = None
        if isinstance(kind, Resistor) and kind.resistance <= 0:
            bad = "resistance"
        elif isinstance(kind, Capacitor) and kind.capacitance <= 0:
            bad = "capacitance"
        elif isinstance(kind, Inductor):
            if kind.inductance <= 0:
                bad = "inductance"
            elif kind.q is not None and kind.q <= 0:
                bad = "quality factor"
            elif kind.f_ref <= 0:
                bad = "reference frequency"
        elif isinstance(kind, Mosfet):
            if kind.width <= 0 or kind.length <= 0:
                bad = "geometry"
            elif kind.nf < 1 or kind.m < 1:
                bad = "finger/multiplier count"
        if bad is not None:
            raise NetlistError(f"nonpositive {bad} on {comp.id}")


# --------------------------------------------------------------------------
# serializer

def circuit_to_netlist(circuit: Circuit) -> str:
    """Render a Circuit back to netlist text.

    parse_netlist(circuit_to_netlist(c), name=c.name) reconstructs a
    structurally identical circuit.  Fixture-only component kinds
    (PolyVcvs) have no netlist form and raise ValueError.
    """
    lines = [f"* {circuit.name}"]
    models: dict[str, MosfetModelCard] = {}
    for comp in circuit.components:
        if isinstance(comp.kind, Mosfet):
            card = models.setdefault(comp.kind.model_name, comp.kind.model)
            if card != comp.kind.model:
                raise ValueError(
                    f"conflicting cards for model {comp.kind.model_name!r}")
    for mname, card in models.items():
        lines.append(
            f".model {mname} NMOS KP={format_value(card.kp)} "
            f"VT0={format_value(card.vt0)} LAMBDA={format_value(card.lam)} "
            f"COX={format_value(card.cox)} CGDO={format_value(card.cgdo)}")
    for comp in circuit.components:
        lines.append(_component_line(comp))
    for port in circuit.ports:
        lines.append(f".port {port.number} {port.plus_node} "
                     f"{port.minus_node} Z0={format_value(port.z0)}")
    for supply in circuit.supplies:
        lines.append(f".supply {supply}")
    lines.append(".end")
    return "\n".join(lines) + "\n"


def _component_line(comp: Component) -> str:
    kind = comp.kind
    t = comp.terminals
    if isinstance(kind, Resistor):
        return f"{comp.id} {t[0]} {t[1]} {format_value(kind.resistance)}"
    if isinstance(kind, Capacitor):
        return f"{comp.id} {t[0]} {t[1]} {format_value(kind.capacitance)}"
    if isinstance(kind, Inductor):
        line = f"{comp.id} {t[0]} {t[1]} {format_value(kind.inductance)}"
        if kind.q is not None:
            line += f" Q={format_value(kind.q)}"
        if kind.f_ref != DEFAULT_F_REF:
            line += f" FREF={format_value(kind.f_ref)}"
        return line
    if isinstance(kind, Mosfet):
        line = (f"{comp.id} {t[0]} {t[1]} {t[2]} {kind.model_name} "
                f"W={format_value(kind.width)} L={format_value(kind.length)}")
        if kind.nf != 1:
            line += f" NF={kind.nf}"
        if kind.m != 1:
            line += f" M={kind.m}"
        return line
    if isinstance(kind, VSource):
        line = f"{comp.id} {t[0]} {t[1]} DC {format_value(kind.dc)}"
        if kind.ac_mag != 0.0:
            line += f" AC {format_value(kind.ac_mag)}"
        if kind.sine is not None:
            line += (f" SIN({format_value(kind.sine.amplitude)} "
                     f"{format_value(kind.sine.freq)} "
                     f"{format_value(kind.sine.phase)})")
        return line
    raise ValueError(f"component {comp.id} ({type(kind).__name__}) "
                     "is not representable in the netlist dialect")


# --------------------------------------------------------------------------
# validation

_DC_PATH_KINDS = (Resistor, Inductor, VSource)


def validate_circuit(circuit: Circuit) -> list[Diagnostic]:
    """Check structural invariants; an empty list means the circuit is sound.

    Beyond per-component checks this verifies that every non-ground node
    has a DC path to ground through resistors, inductors, voltage sources
    or a MOSFET channel, so downstream DC solves are well posed.
    """
    diags: list[Diagnostic] = []
    nodes = circuit.nodes

    if GROUND not in nodes:
        diags.append(Diagnostic("error", "no ground: node \"0\" is never "
                                "referenced by any component"))

    seen: dict[str, str] = {}
    for comp in circuit.components:
        key = comp.id.lower()
        if key in seen:
            diags.append(Diagnostic("error",
                                    f"duplicate component id (also {seen[key]})",
                                    comp.id))
        seen[key] = comp.id

    for comp in circuit.components:
        kind = comp.kind
        expected = 4 if isinstance(kind, PolyVcvs) else \
            3 if isinstance(kind, Mosfet) else 2
        if len(comp.terminals) != expected:
            diags.append(Diagnostic("error",
                                    f"expected {expected} terminals, "
                                    f"got {len(comp.terminals)}", comp.id))
        if isinstance(kind, Resistor) and kind.resistance <= 0:
            diags.append(Diagnostic("error", "nonpositive resistance", comp.id))
        if isinstance(kind, Capacitor) and kind.capacitance <= 0:
            diags.append(Diagnostic("error", "nonpositive capacitance", comp.id))
        if isinstance(kind, Inductor):
            if kind.inductance <= 0:
                diags.append(Diagnostic("error", "nonpositive inductance",
                                        comp.id))
            if kind.q is not None and kind.q <= 0:
                diags.append(Diagnostic("error", "nonpositive Q", comp.id))
        if isinstance(kind, Mosfet):
            if kind.width <= 0 or kind.length <= 0:
                diags.append(Diagnostic("error", "nonpositive geometry",
                                        comp.id))
            if kind.nf < 1 or kind.m < 1:
                diags.append(Diagnostic("error", "NF and M must be >= 1",
                                        comp.id))

    for port in circuit.ports:
        if port.z0 <= 0:
            diags.append(Diagnostic("error", "nonpositive Z0",
                                    f"port {port.number}"))
        if port.plus_node == port.minus_node:
            diags.append(Diagnostic("error", "port terminals coincide",
                                    f"port {port.number}"))
        for node in (port.plus_node, port.minus_node):
            if node not in nodes and node != GROUND:
                diags.append(Diagnostic("error",
                                        f"port references unknown node {node!r}",
                                        f"port {port.number}"))
    numbers = sorted(p.number for p in circuit.ports)
    if numbers and numbers != list(range(1, len(numbers) + 1)):
        diags.append(Diagnostic("error",
                                f"port numbers {numbers} are not consecutive "
                                "from 1"))

    comp_ids = {c.id.lower() for c in circuit.components}
    for supply in circuit.supplies:
        if supply.lower() not in comp_ids:
            diags.append(Diagnostic("error", "supply names unknown component",
                                    supply))
        else:
            comp = circuit.component(supply)
            if not isinstance(comp.kind, VSource):
                diags.append(Diagnostic("error",
                                        "supply must be a voltage source",
                                        supply))

    diags.extend(_floating_dc_nodes(circuit))
    return diags


def _floating_dc_nodes(circuit: Circuit) -> list[Diagnostic]:
    adjacency: dict[str, set[str]] = {n: set() for n in circuit.nodes}
    for comp in circuit.components:
        kind = comp.kind
        edge: tuple[str, str] | None = None
        if isinstance(kind, _DC_PATH_KINDS):
            edge = (comp.terminals[0], comp.terminals[1])
        elif isinstance(kind, Mosfet):
            edge = (comp.terminals[0], comp.terminals[2])  # drain-source
        elif isinstance(kind, PolyVcvs):
            edge = (comp.terminals[0], comp.terminals[1])  # driven output
        if edge and edge[0] != edge[1]:
            adjacency[edge[0]].add(edge[1])
            adjacency[edge[1]].add(edge[0])

    reached = {GROUND}
    frontier = [GROUND]
    while frontier:
        here = frontier.pop()
        for neighbor in adjacency.get(here, ()):
            if neighbor not in reached:
                reached.add(neighbor)
                frontier.append(neighbor)

    out = []
    for node in sorted(circuit.nodes - reached):
        out.append(Diagnostic("error", "floating DC node: no path to ground "
                              "through R, L, V source or MOSFET channel", node))
    return out
