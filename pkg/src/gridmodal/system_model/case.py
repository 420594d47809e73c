"""Case data types and the line-oriented case-file parser.

A case file is UTF-8 text, one record per line, ``#`` starts a comment.
Records::

    SYSTEM s_base=100 f=50
    BUS id=1 name=Dokan kind=slack kv=132 vset=1.02 angle=0
    BRANCH from=1 to=2 r=0.01 x=0.08 b=0.02 len=30
    LOAD bus=5 p0=40 q0=12 v0=1.0 a=2 b=2
    UNIT bus=1 name=G1 mva=400 pset=300 machine{h=3.2 xd=1.1 ...}
         exciter{st1a ka=200} governor{hydro tw=1.4} pss{k_i=20}

Brace blocks may continue over several lines.  ``angle`` is in degrees.
Branch ``r``, ``x``, ``b`` are per-unit totals on the system base; the
alternatives ``r_ohm``, ``x_ohm``, ``b_us`` (microsiemens) are converted
using the from-bus voltage base.  Unknown keys are rejected.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from ..dynamics.params import (ExciterST1A, GasGovernor, HydroGovernor,
                               MachineParams, NoExciter, NoGovernor, PssMB,
                               from_mapping)
from ..exceptions import (DuplicateId, MalformedCase, MultipleSlackBuses,
                          NoSlackBus, UnitOnPqBus)

#: lines longer than this are represented by their exact-PI equivalent
LONG_LINE_KM = 25.0


class BusKind(enum.Enum):
    SLACK = "slack"
    PV = "pv"
    PQ = "pq"


class LineModel(enum.Enum):
    NOMINAL_PI = "nominal_pi"
    DISTRIBUTED_EXACT_PI = "exact_pi"


def line_model_for(length_km: float) -> LineModel:
    if length_km > LONG_LINE_KM:
        return LineModel.DISTRIBUTED_EXACT_PI
    return LineModel.NOMINAL_PI


@dataclass(frozen=True)
class SystemBase:
    s_base: float = 100.0
    f_nominal: float = 50.0

    @property
    def omega_s(self) -> float:
        return 2.0 * math.pi * self.f_nominal


@dataclass(frozen=True)
class Bus:
    id: int
    name: str
    kind: BusKind
    base_kv: float
    v_set: Optional[float] = None
    angle_set: Optional[float] = None


@dataclass(frozen=True)
class Branch:
    """Series ``r + jx`` and total charging ``b`` are the nominal line totals."""

    from_bus: int
    to_bus: int
    r: float
    x: float
    b_shunt: float = 0.0
    length_km: float = 0.0
    model: LineModel = LineModel.NOMINAL_PI


@dataclass(frozen=True)
class LoadModel:
    bus: int
    p0: float
    q0: float
    v0: float = 1.0
    a: float = 2.0
    b: float = 2.0


@dataclass(frozen=True)
class GeneratingUnit:
    bus: int
    name: str
    mva_base: float
    p_set: Optional[float]
    machine: MachineParams = field(default_factory=MachineParams)
    exciter: object = field(default_factory=ExciterST1A)
    governor: object = field(default_factory=HydroGovernor)
    pss: Optional[PssMB] = None


@dataclass(frozen=True)
class PowerSystemCase:
    base: SystemBase
    buses: Tuple[Bus, ...]
    branches: Tuple[Branch, ...]
    loads: Tuple[LoadModel, ...]
    units: Tuple[GeneratingUnit, ...]
    name: str = "case"

    def __post_init__(self):
        validate_case(self)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def index(self) -> Dict[int, int]:
        """Bus id to internal (declaration order) position."""
        return {b.id: i for i, b in enumerate(self.buses)}

    @property
    def slack(self) -> Bus:
        return next(b for b in self.buses if b.kind is BusKind.SLACK)

    def bus(self, bus_id: int) -> Bus:
        return self.buses[self.index[bus_id]]

    def unit(self, name: str) -> GeneratingUnit:
        for u in self.units:
            if u.name == name:
                return u
        raise KeyError(name)

    @property
    def total_load_mw(self) -> float:
        return sum(ld.p0 for ld in self.loads)

    def without_pss(self) -> "PowerSystemCase":
        from dataclasses import replace
        return replace(self, units=tuple(replace(u, pss=None) for u in self.units))


def validate_case(case: PowerSystemCase):
    ids = [b.id for b in case.buses]
    seen = set()
    for i in ids:
        if i in seen:
            raise DuplicateId(f"bus id {i} declared twice")
        seen.add(i)
    slacks = [b for b in case.buses if b.kind is BusKind.SLACK]
    if not slacks:
        raise NoSlackBus("case has no slack bus")
    if len(slacks) > 1:
        raise MultipleSlackBuses(
            "slack buses: " + ", ".join(str(b.id) for b in slacks))
    if case.base.s_base <= 0 or case.base.f_nominal not in (50.0, 60.0):
        raise MalformedCase(None, "SYSTEM needs s_base > 0 and f in {50, 60}")
    for b in case.buses:
        if b.base_kv <= 0:
            raise MalformedCase(None, f"bus {b.id}: kv must be positive")
        if b.v_set is not None and b.v_set <= 0:
            raise MalformedCase(None, f"bus {b.id}: vset must be positive")
    for br in case.branches:
        for end in (br.from_bus, br.to_bus):
            if end not in seen:
                raise MalformedCase(None, f"branch references unknown bus {end}")
        if br.r == 0 and br.x == 0:
            raise MalformedCase(None, f"branch {br.from_bus}-{br.to_bus}: zero impedance")
        if br.length_km < 0:
            raise MalformedCase(None, "branch length must be non-negative")
        if br.model is not line_model_for(br.length_km):
            raise MalformedCase(
                None, f"branch {br.from_bus}-{br.to_bus}: model {br.model.value} "
                f"inconsistent with length {br.length_km} km")
    for ld in case.loads:
        if ld.bus not in seen:
            raise MalformedCase(None, f"load references unknown bus {ld.bus}")
        if ld.v0 <= 0:
            raise MalformedCase(None, f"load at bus {ld.bus}: v0 must be positive")
        if not (0 <= ld.a <= 2 and 0 <= ld.b <= 2):
            raise MalformedCase(None, f"load at bus {ld.bus}: exponents must lie in [0, 2]")
    names = set()
    unit_buses = set()
    kinds = {b.id: b.kind for b in case.buses}
    for u in case.units:
        if u.bus not in seen:
            raise MalformedCase(None, f"unit {u.name} references unknown bus {u.bus}")
        if u.name in names:
            raise DuplicateId(f"unit name {u.name!r} declared twice")
        names.add(u.name)
        if u.bus in unit_buses:
            raise MalformedCase(None, f"bus {u.bus} carries more than one unit")
        unit_buses.add(u.bus)
        if kinds[u.bus] is BusKind.PQ:
            raise UnitOnPqBus(f"unit {u.name} sits on PQ bus {u.bus}")
        if kinds[u.bus] is BusKind.SLACK and u.p_set is not None:
            raise MalformedCase(None, f"unit {u.name} on the slack bus must not set pset")
        if u.mva_base <= 0:
            raise MalformedCase(None, f"unit {u.name}: mva must be positive")


# -- parser ---------------------------------------------------------------------

_BLOCK = re.compile(r"(\w+)\{([^{}]*)\}")
_PAIR = re.compile(r"^([A-Za-z_]\w*)=(\S+)$")


def _logical_records(text: str):
    """Yield (line number, record text) with comments removed.

    A record continues over following lines while a brace block is open or
    while those lines are indented.
    """
    pending, start, depth = [], None, 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        line = body.strip()
        if not line:
            continue
        continues = depth > 0 or (pending and body[:1] in (" ", "\t"))
        if not continues and pending:
            yield start, " ".join(pending)
            pending, start = [], None
        if start is None:
            start = lineno
        pending.append(line)
        depth += line.count("{") - line.count("}")
        if depth < 0:
            raise MalformedCase(lineno, "unbalanced '}'")
    if depth > 0:
        raise MalformedCase(start, "unterminated '{' block")
    if pending:
        yield start, " ".join(pending)


def _split(record: str, lineno: int):
    blocks = {}
    for name, body in _BLOCK.findall(record):
        if name in blocks:
            raise MalformedCase(lineno, f"block {name!r} given twice")
        blocks[name] = body.split()
    flat = _BLOCK.sub(" ", record).split()
    keyword, tokens = flat[0].upper(), flat[1:]
    pairs = {}
    for tok in tokens:
        m = _PAIR.match(tok)
        if not m:
            raise MalformedCase(lineno, f"cannot read token {tok!r}")
        if m.group(1) in pairs:
            raise MalformedCase(lineno, f"key {m.group(1)!r} given twice")
        pairs[m.group(1)] = m.group(2)
    return keyword, pairs, blocks


def _pairs(tokens, lineno):
    out = {}
    for tok in tokens:
        m = _PAIR.match(tok)
        if not m:
            raise MalformedCase(lineno, f"cannot read token {tok!r}")
        out[m.group(1)] = m.group(2)
    return out


class _Fields:
    """Typed accessor over one record's key=value pairs that tracks consumption."""

    def __init__(self, pairs, lineno, keyword):
        self.pairs = dict(pairs)
        self.lineno = lineno
        self.keyword = keyword

    def take(self, key, conv=float, default=...):
        if key not in self.pairs:
            if default is ...:
                raise MalformedCase(self.lineno, f"{self.keyword} needs {key}=")
            return default
        raw = self.pairs.pop(key)
        try:
            return conv(raw)
        except ValueError:
            raise MalformedCase(self.lineno, f"{key}={raw!r} is not valid") from None

    def done(self):
        if self.pairs:
            raise MalformedCase(
                self.lineno, f"unknown {self.keyword} key(s): {', '.join(sorted(self.pairs))}")


def _int(raw):
    value = float(raw)
    if value != int(value):
        raise ValueError(raw)
    return int(value)


def _kind(raw):
    try:
        return BusKind(raw.lower())
    except ValueError:
        raise ValueError(raw) from None


def parse_case_text(text: str, name: str = "case") -> PowerSystemCase:
    from .network import z_base

    base = SystemBase()
    buses, raw_branches, loads, units = [], [], [], []
    seen_system = False
    for lineno, record in _logical_records(text):
        keyword, pairs, blocks = _split(record, lineno)
        rec = _Fields(pairs, lineno, keyword)
        if keyword != "UNIT" and blocks:
            raise MalformedCase(lineno, f"{keyword} takes no blocks")
        if keyword == "SYSTEM":
            if seen_system:
                raise MalformedCase(lineno, "SYSTEM given twice")
            seen_system = True
            base = SystemBase(rec.take("s_base", default=100.0), rec.take("f", default=50.0))
            rec.done()
            if base.s_base <= 0 or base.f_nominal not in (50.0, 60.0):
                raise MalformedCase(lineno, "SYSTEM needs s_base > 0 and f in {50, 60}")
        elif keyword == "BUS":
            kind = rec.take("kind", _kind)
            bus = Bus(
                id=rec.take("id", _int),
                name=rec.take("name", str, default=None),
                kind=kind,
                base_kv=rec.take("kv"),
                v_set=rec.take("vset", default=1.0 if kind is not BusKind.PQ else None),
                angle_set=math.radians(rec.take("angle", default=0.0))
                if kind is BusKind.SLACK else None,
            )
            if kind is BusKind.PQ and bus.v_set is not None:
                raise MalformedCase(lineno, "PQ buses take no vset")
            if bus.name is None:
                bus = Bus(bus.id, f"bus{bus.id}", bus.kind, bus.base_kv, bus.v_set, bus.angle_set)
            rec.done()
            if bus.base_kv <= 0:
                raise MalformedCase(lineno, "kv must be positive")
            if bus.v_set is not None and bus.v_set <= 0:
                raise MalformedCase(lineno, "vset must be positive")
            buses.append(bus)
        elif keyword == "BRANCH":
            raw_branches.append((lineno, rec))
        elif keyword == "LOAD":
            ld = LoadModel(bus=rec.take("bus", _int), p0=rec.take("p0"),
                           q0=rec.take("q0", default=0.0), v0=rec.take("v0", default=1.0),
                           a=rec.take("a", default=2.0), b=rec.take("b", default=2.0))
            rec.done()
            if ld.v0 <= 0:
                raise MalformedCase(lineno, "v0 must be positive")
            if not (0 <= ld.a <= 2 and 0 <= ld.b <= 2):
                raise MalformedCase(lineno, "load exponents a, b must lie in [0, 2]")
            loads.append(ld)
        elif keyword == "UNIT":
            units.append(_parse_unit(rec, blocks, lineno))
        else:
            raise MalformedCase(lineno, f"unknown record {keyword!r}")

    kv = {b.id: b.base_kv for b in buses}
    branches = []
    for lineno, rec in raw_branches:
        f_bus, t_bus = rec.take("from", _int), rec.take("to", _int)
        if f_bus not in kv or t_bus not in kv:
            raise MalformedCase(lineno, "branch references an undeclared bus")
        if f_bus == t_bus:
            raise MalformedCase(lineno, "branch connects a bus to itself")
        length = rec.take("len", default=0.0)
        zb = z_base(kv[f_bus], base.s_base)
        r = rec.take("r", default=None)
        x = rec.take("x", default=None)
        b = rec.take("b", default=None)
        r_ohm = rec.take("r_ohm", default=None)
        x_ohm = rec.take("x_ohm", default=None)
        b_us = rec.take("b_us", default=None)
        if (r is None) == (r_ohm is None) or (x is None) == (x_ohm is None):
            raise MalformedCase(lineno, "give exactly one of r/r_ohm and one of x/x_ohm")
        if b is not None and b_us is not None:
            raise MalformedCase(lineno, "give at most one of b/b_us")
        r = r if r is not None else r_ohm / zb
        x = x if x is not None else x_ohm / zb
        b = b if b is not None else (b_us * 1e-6 * zb if b_us is not None else 0.0)
        model_raw = rec.take("model", str, default=None)
        rec.done()
        if length < 0:
            raise MalformedCase(lineno, "len must be non-negative")
        if r == 0 and x == 0:
            raise MalformedCase(lineno, "branch needs non-zero r or x")
        model = line_model_for(length)
        if model_raw is not None:
            try:
                declared = LineModel(model_raw.lower())
            except ValueError:
                raise MalformedCase(lineno, f"unknown line model {model_raw!r}") from None
            if declared is not model:
                raise MalformedCase(
                    lineno, f"model={model_raw} contradicts the {LONG_LINE_KM:g} km rule")
        branches.append(Branch(f_bus, t_bus, r, x, b, length, model))

    return PowerSystemCase(base, tuple(buses), tuple(branches), tuple(loads),
                           tuple(units), name=name)


_GOVERNORS = {"hydro": HydroGovernor, "gas": GasGovernor, "none": NoGovernor}
_EXCITERS = {"st1a": ExciterST1A, "none": NoExciter}


def _typed_block(tokens, table, default_type, what, lineno):
    if tokens and "=" not in tokens[0]:
        kind, tokens = tokens[0].lower(), tokens[1:]
    else:
        kind = default_type
    if kind not in table:
        raise MalformedCase(lineno, f"unknown {what} type {kind!r}")
    return from_mapping(table[kind], _pairs(tokens, lineno), lineno)


def _parse_unit(rec: _Fields, blocks, lineno) -> GeneratingUnit:
    unknown = set(blocks) - {"machine", "exciter", "governor", "pss"}
    if unknown:
        raise MalformedCase(lineno, f"unknown UNIT block(s): {', '.join(sorted(unknown))}")
    bus = rec.take("bus", _int)
    unit = GeneratingUnit(
        bus=bus,
        name=rec.take("name", str, default=f"G{bus}"),
        mva_base=rec.take("mva"),
        p_set=rec.take("pset", default=None),
        machine=from_mapping(MachineParams, _pairs(blocks.get("machine", []), lineno), lineno),
        exciter=_typed_block(blocks.get("exciter", []), _EXCITERS, "st1a", "exciter", lineno),
        governor=_typed_block(blocks.get("governor", []), _GOVERNORS, "hydro", "governor",
                              lineno),
        pss=from_mapping(PssMB, _pairs(blocks["pss"], lineno), lineno)
        if "pss" in blocks else None,
    )
    rec.done()
    if unit.mva_base <= 0:
        raise MalformedCase(lineno, "mva must be positive")
    return unit


def parse_case(path) -> PowerSystemCase:
    """Read and validate a case file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedCase(None, f"not UTF-8 text: {exc}") from None
    return parse_case_text(text, name=path.stem)
