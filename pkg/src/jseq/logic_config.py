"""Logic presets, active rule sets, axiom-instance recognition and constant specifications."""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .syntax import (
    BOTTOM,
    And,
    App,
    BarQuery,
    Bang,
    Bottom,
    Box,
    Const,
    Formula,
    Imp,
    Just,
    Neg,
    Or,
    Prop,
    Query,
    Sum,
    SyntaxErrorAt,
    jl_subformulas,
    parse_formula,
)

JUSTIFICATION_AXIOMS = ("jT", "jD", "jB", "j4", "j5")
MODAL_AXIOMS = ("T", "D", "B", "4", "5")

RULE_MODE = "rule"
AXIOM_MODE = "axiomE_bot"


class ConfigError(ValueError):
    pass


class RuleId(enum.Enum):
    """Rule names; the value is the ASCII spelling used in JSON and text output."""

    AX = "Ax"
    AX_BOT = "AxBot"
    AX_R = "AxR"
    AX_E = "AxE"
    AX_E_BOT = "AxEBot"
    L_NEG = "L~"
    R_NEG = "R~"
    L_AND = "L&"
    R_AND = "R&"
    L_OR = "L|"
    R_OR = "R|"
    L_IMP = "L->"
    R_IMP = "R->"
    L_JUST = "L:"
    R_JUST = "R:"
    E = "E"
    AN = "AN"
    IAN = "IAN"
    E_SUM_L = "El+"
    E_SUM_R = "Er+"
    E_APP = "E*"
    E_BANG = "E!"
    MON = "Mon"
    E_BARQ = "E??"
    SE = "SE"
    E_Q = "E?"
    L_BOX = "L[]"
    R_BOX = "R[]"
    REF = "Ref"
    SER = "Ser"
    SYM = "Sym"
    TRANS = "Trans"
    EUCL = "Eucl"
    EUCL_STAR = "Eucl*"
    ANTI_MON = "AntiMon"

    @property
    def arity(self) -> int:
        if self in INITIAL_RULES:
            return 0
        if self in (RuleId.R_AND, RuleId.L_OR, RuleId.L_IMP, RuleId.E_Q, RuleId.E_BARQ):
            return 2
        return 1

    @property
    def has_eigenlabel(self) -> bool:
        return self in (RuleId.R_JUST, RuleId.R_BOX, RuleId.SER)

    @property
    def is_initial(self) -> bool:
        return self in INITIAL_RULES

    @staticmethod
    def parse(text: str) -> "RuleId":
        try:
            return RuleId(text)
        except ValueError:
            raise ConfigError(f"unknown rule {text!r}") from None


INITIAL_RULES = frozenset({RuleId.AX, RuleId.AX_BOT, RuleId.AX_R, RuleId.AX_E, RuleId.AX_E_BOT})

# evidence-producing rules whose compound terms are restricted to the root's subterms
EVIDENCE_RULES = frozenset({RuleId.E_SUM_L, RuleId.E_SUM_R, RuleId.E_APP, RuleId.E_BANG})

PROPOSITIONAL_RULES = (
    RuleId.L_NEG, RuleId.R_NEG, RuleId.L_AND, RuleId.R_AND,
    RuleId.L_OR, RuleId.R_OR, RuleId.L_IMP, RuleId.R_IMP,
)


@dataclass(frozen=True)
class LogicConfig:
    justification_axioms: frozenset = frozenset()
    modal_axioms: Optional[frozenset] = None
    modal_enabled: bool = False
    connection_axiom: bool = False
    s4lpn_extras: bool = False
    seriality_mode: str = RULE_MODE
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "justification_axioms", frozenset(self.justification_axioms))
        if self.modal_axioms is not None:
            object.__setattr__(self, "modal_axioms", frozenset(self.modal_axioms))
        if not self.name:
            object.__setattr__(self, "name", _auto_name(self))

    @property
    def jaxioms(self) -> frozenset:
        return self.justification_axioms

    @property
    def maxioms(self) -> frozenset:
        return self.modal_axioms or frozenset()

    def has(self, axiom: str) -> bool:
        return axiom in self.justification_axioms

    @property
    def is_fk(self) -> bool:
        return self.seriality_mode == AXIOM_MODE

    def with_seriality(self, mode: str) -> "LogicConfig":
        cfg = LogicConfig(
            self.justification_axioms, self.modal_axioms, self.modal_enabled,
            self.connection_axiom, self.s4lpn_extras, mode,
            self.name + ("_Fk" if mode == AXIOM_MODE else ""),
        )
        validate_config(cfg)
        return cfg


def _auto_name(cfg: LogicConfig) -> str:
    j = "J" + "".join(a[1] for a in ("jT", "jD", "jB", "j4", "j5") if cfg.has(a))
    if not cfg.modal_enabled:
        return j
    m = "K" + "".join(a for a in MODAL_AXIOMS if a in cfg.maxioms)
    return f"{m}+{j}" + ("+conn" if cfg.connection_axiom else "") + ("+N" if cfg.s4lpn_extras else "")


def validate_config(cfg: LogicConfig) -> None:
    bad = cfg.justification_axioms - set(JUSTIFICATION_AXIOMS)
    if bad:
        raise ConfigError(f"unknown justification axioms {sorted(bad)}")
    if cfg.modal_axioms is not None and cfg.modal_axioms - set(MODAL_AXIOMS):
        raise ConfigError(f"unknown modal axioms {sorted(cfg.modal_axioms - set(MODAL_AXIOMS))}")
    if cfg.modal_axioms and not cfg.modal_enabled:
        raise ConfigError("modal axioms given but modal component disabled")
    if cfg.connection_axiom and not cfg.modal_enabled:
        raise ConfigError("the connection axiom needs the modal component")
    if cfg.s4lpn_extras:
        if not (cfg.justification_axioms == {"jT", "j4"} and cfg.maxioms == {"T", "4"} and cfg.connection_axiom):
            raise ConfigError("S4LPN extras are only defined on top of S4LP")
    if cfg.seriality_mode not in (RULE_MODE, AXIOM_MODE):
        raise ConfigError(f"unknown seriality mode {cfg.seriality_mode!r}")
    if cfg.seriality_mode == AXIOM_MODE and not cfg.has("jD"):
        raise ConfigError("the consistent-evidence variant requires jD")


def _justification_name(axioms: Iterable[str]) -> str:
    axioms = set(axioms)
    name = "J" + "".join(c for a, c in (("jT", "T"), ("jD", "D"), ("jB", "B"), ("j4", "4"), ("j5", "5")) if a in axioms)
    return "LP" if name == "JT4" else name


def _build_presets() -> dict[str, LogicConfig]:
    presets: dict[str, LogicConfig] = {}
    rest = ("jB", "j4", "j5")
    for head in ((), ("jT",), ("jD",)):
        for k in range(len(rest) + 1):
            for combo in itertools.combinations(rest, k):
                axioms = frozenset(head + combo)
                name = _justification_name(axioms)
                presets[name] = LogicConfig(axioms, name=name)
    presets["JT4"] = presets["LP"]
    modal = {
        "K": (), "T": ("T",), "D": ("D",), "K4": ("4",), "D4": ("D", "4"), "S4": ("T", "4"),
        "KB": ("B",), "TB": ("T", "B"), "DB": ("D", "B"), "K5": ("5",), "K45": ("4", "5"),
        "D45": ("D", "4", "5"), "S5": ("T", "5"),
    }
    for name, ax in modal.items():
        presets[name] = LogicConfig(frozenset(), frozenset(ax), True, name=name)
    combined = {
        "KJ": ((), ()), "TJT": (("T",), ("jT",)), "DJD": (("D",), ("jD",)),
        "K4J4": (("4",), ("j4",)), "D4JD4": (("D", "4"), ("jD", "j4")),
        "S4LP": (("T", "4"), ("jT", "j4")), "S5JT45": (("T", "5"), ("jT", "j4", "j5")),
    }
    for name, (m, j) in combined.items():
        presets[name] = LogicConfig(frozenset(j), frozenset(m), True, True, name=name)
    presets["S4LPN"] = LogicConfig(frozenset({"jT", "j4"}), frozenset({"T", "4"}), True, True, True, name="S4LPN")
    for cfg in presets.values():
        validate_config(cfg)
    return presets


PRESETS: dict[str, LogicConfig] = _build_presets()


def preset(name: str) -> LogicConfig:
    if name.endswith("_Fk"):
        return preset(name[:-3]).with_seriality(AXIOM_MODE)
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown logic {name!r}; known: {', '.join(sorted(PRESETS))}") from None


def rules_for_logic(cfg: LogicConfig) -> frozenset:
    validate_config(cfg)
    r = {RuleId.AX, RuleId.AX_BOT, RuleId.AX_R, RuleId.AX_E, *PROPOSITIONAL_RULES,
         RuleId.L_JUST, RuleId.R_JUST, RuleId.E, RuleId.E_SUM_L, RuleId.E_SUM_R, RuleId.E_APP}
    r.add(RuleId.AN if cfg.has("j4") else RuleId.IAN)
    if cfg.has("jT"):
        r.add(RuleId.REF)
    if cfg.has("jD"):
        r.add(RuleId.AX_E_BOT if cfg.is_fk else RuleId.SER)
    if cfg.has("j4"):
        r |= {RuleId.E_BANG, RuleId.MON, RuleId.TRANS}
    if cfg.has("jB"):
        r |= {RuleId.E_BARQ, RuleId.SYM}
    if cfg.has("j5"):
        r |= {RuleId.SE, RuleId.E_Q}
    if cfg.modal_enabled:
        r |= {RuleId.L_BOX, RuleId.R_BOX}
        m = cfg.maxioms
        if "T" in m:
            r.add(RuleId.REF)
        if "D" in m:
            r.add(RuleId.SER)
        if "B" in m:
            r.add(RuleId.SYM)
        if "4" in m:
            r.add(RuleId.TRANS)
        if "5" in m:
            r |= {RuleId.EUCL, RuleId.EUCL_STAR}
    if cfg.s4lpn_extras:
        r |= {RuleId.ANTI_MON, RuleId.SE}
    return frozenset(r)


# --------------------------------------------------------------------------
# axiom instances

MAX_TAUT_ATOMS = 20


def _opaque_atoms(a: Formula, out: list) -> None:
    if isinstance(a, (Prop, Just, Box)):
        if a not in out:
            out.append(a)
    elif isinstance(a, Neg):
        _opaque_atoms(a.sub, out)
    elif isinstance(a, (And, Or, Imp)):
        _opaque_atoms(a.left, out)
        _opaque_atoms(a.right, out)


def _truth(a: Formula, v: dict) -> bool:
    if isinstance(a, Bottom):
        return False
    if isinstance(a, Neg):
        return not _truth(a.sub, v)
    if isinstance(a, And):
        return _truth(a.left, v) and _truth(a.right, v)
    if isinstance(a, Or):
        return _truth(a.left, v) or _truth(a.right, v)
    if isinstance(a, Imp):
        return (not _truth(a.left, v)) or _truth(a.right, v)
    return v[a]


def is_tautology(a: Formula) -> bool:
    """Classical tautology with every t:B and []B taken as an opaque atom."""
    atoms: list = []
    _opaque_atoms(a, atoms)
    if len(atoms) > MAX_TAUT_ATOMS:
        raise ConfigError(f"tautology check limited to {MAX_TAUT_ATOMS} atoms, got {len(atoms)}")
    for bits in itertools.product((False, True), repeat=len(atoms)):
        if not _truth(a, dict(zip(atoms, bits))):
            return False
    return True


def _scheme(a: Formula, cfg: LogicConfig) -> Optional[str]:
    if not isinstance(a, Imp):
        return None
    l, r = a.left, a.right
    if isinstance(l, Just) and isinstance(r, Just) and isinstance(r.term, Sum) and l.body == r.body:
        if l.term in (r.term.left, r.term.right):
            return "Sum"
    if (isinstance(l, Just) and isinstance(l.body, Imp) and isinstance(r, Imp)
            and isinstance(r.left, Just) and isinstance(r.right, Just)
            and r.right.term == App(l.term, r.left.term)
            and l.body.left == r.left.body and l.body.right == r.right.body):
        return "jK"
    if cfg.has("jT") and isinstance(l, Just) and l.body == r:
        return "jT"
    if cfg.has("jD") and isinstance(l, Just) and l.body == BOTTOM and r == BOTTOM:
        return "jD"
    if cfg.has("j4") and isinstance(l, Just) and r == Just(Bang(l.term), l):
        return "j4"
    if (cfg.has("jB") and isinstance(l, Neg) and isinstance(r, Just) and isinstance(r.term, BarQuery)
            and r.body == Neg(Just(r.term.inner, l.sub))):
        return "jB"
    if (cfg.has("j5") and isinstance(l, Neg) and isinstance(l.sub, Just)
            and r == Just(Query(l.sub.term), l)):
        return "j5"
    if cfg.modal_enabled:
        if (isinstance(l, Box) and isinstance(l.body, Imp) and isinstance(r, Imp)
                and r.left == Box(l.body.left) and r.right == Box(l.body.right)):
            return "K"
        m = cfg.maxioms
        if "T" in m and isinstance(l, Box) and l.body == r:
            return "T"
        if "D" in m and l == Box(BOTTOM) and r == BOTTOM:
            return "D"
        if "4" in m and isinstance(l, Box) and r == Box(l):
            return "4"
        if "B" in m and isinstance(l, Neg) and r == Box(Neg(Box(l.sub))):
            return "B"
        if "5" in m and isinstance(l, Neg) and isinstance(l.sub, Box) and r == Box(l):
            return "5"
        if cfg.connection_axiom and isinstance(l, Just) and r == Box(l.body):
            return "connection"
    return None


def is_axiom_instance(cfg: LogicConfig, a: Formula) -> tuple[bool, Optional[str]]:
    name = _scheme(a, cfg)
    if name is not None:
        return True, name
    if is_tautology(a):
        return True, "Taut"
    return False, None


# --------------------------------------------------------------------------
# constant specifications

def split_cs_entry(entry: Formula) -> tuple[list[str], Formula]:
    """Split ``c_n:...:c_1:A`` into ``([c_n, ..., c_1], A)``."""
    consts: list[str] = []
    a = entry
    while isinstance(a, Just) and isinstance(a.term, Const):
        consts.append(a.term.name)
        a = a.body
    return consts, a


@dataclass(frozen=True)
class ConstantSpec:
    entries: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, a: object) -> bool:
        return a in self._set

    @property
    def _set(self) -> frozenset:
        return frozenset(self.entries)

    def evidence_pairs(self) -> list[tuple[Const, Formula]]:
        """``(c_n, c_{n-1}:...:A)`` for every entry."""
        out = []
        for e in self.entries:
            if isinstance(e, Just) and isinstance(e.term, Const):
                out.append((e.term, e.body))
        return out

    def is_injective(self) -> bool:
        seen: set[str] = set()
        for e in self.entries:
            consts, _ = split_cs_entry(e)
            for c in consts:
                if c in seen:
                    return False
                seen.add(c)
        return True

    def subformulas(self) -> set[Formula]:
        out: set[Formula] = set()
        for e in self.entries:
            out |= jl_subformulas(e)
        return out


EMPTY_CS = ConstantSpec(())


@dataclass
class CSReport:
    violations: list[str] = field(default_factory=list)
    injective: bool = True

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_cs(cfg: LogicConfig, cs: ConstantSpec) -> CSReport:
    report = CSReport(injective=cs.is_injective())
    present = set(cs.entries)
    for e in cs.entries:
        consts, body = split_cs_entry(e)
        if not consts:
            report.violations.append(f"{e}: not of the form c:A")
            continue
        try:
            ok, _ = is_axiom_instance(cfg, body)
        except ConfigError as exc:
            report.violations.append(f"{e}: {exc}")
            continue
        if not ok:
            report.violations.append(f"{e}: {body} is not an axiom instance of {cfg.name}")
        if cfg.has("j4"):
            if len(consts) > 1:
                report.violations.append(f"{e}: nested entry in a logic with positive introspection")
        elif len(consts) > 1 and e.body not in present:
            report.violations.append(f"{e}: not downward closed, missing {e.body}")
    return report


_CS_PREFIX = re.compile(r"\s*([a-e][A-Za-z0-9_]*)\s*:")


def parse_cs_entry(line: str) -> Formula:
    """``c2 : c1 : <formula>``; every leading constant prefix belongs to the chain."""
    consts: list[str] = []
    pos = 0
    while True:
        m = _CS_PREFIX.match(line, pos)
        if not m:
            break
        consts.append(m.group(1))
        pos = m.end()
    if not consts:
        raise SyntaxErrorAt("constant specification entry must start with a constant", line, 0)
    body = parse_formula(line[pos:])
    for c in reversed(consts):
        body = Just(Const(c), body)
    return body


def parse_cs(text: str) -> ConstantSpec:
    entries = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            entries.append(parse_cs_entry(line))
    return ConstantSpec(tuple(entries))


def load_cs(path: str | Path) -> ConstantSpec:
    return parse_cs(Path(path).read_text(encoding="utf-8"))


def format_cs(cs: ConstantSpec) -> str:
    lines = []
    for e in cs.entries:
        consts, body = split_cs_entry(e)
        lines.append(" : ".join(consts + [f"({body})"]))
    return "\n".join(lines) + ("\n" if lines else "")
