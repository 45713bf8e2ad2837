"""Scenario files: a line-oriented DSL declaring the superdomain, algebra,
infinitesimal action, named fields, loops and verdict flags.

Grammar (one clause per line, `#` starts a comment):

    scalar real|complex
    manifold even <name> [<name> ...]
    manifold odd <name> [<name> ...]
    manifold exclude <even coord> != <number>
    algebra <name>
    basis <name> even|odd
    bracket [<a>,<b>] = <coeff>*<k> [+ <coeff>*<k> ...] | 0
    lambda <basis name> = <vector field>
    fields <name> = <vector field>
    loop <name> base <coord>=<value>[,...] segments [<basis>: <expr>, t in [<a>,<b>]] ... [winding-note <int>]
    flags reduced_global=<bool> simply_connected=<bool> support_compact=<bool> global_flow_generators=<bool>

A vector field literal is `0` or a sum of `(<expr>) d/d<coord>` terms; the
coefficient expressions may use even and odd coordinates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import expr as ex
from .errors import ScenarioError
from .fields import InfinitesimalAction, LieSuperAlgebra, SuperVectorField
from .grassmann import SuperDomain, SuperFunction, grassmannify
from .holonomy import GroupPath, PathSegment, VerdictFlags


@dataclass
class Scenario:
    name: str
    domain: SuperDomain
    algebra: LieSuperAlgebra | None = None
    action: InfinitesimalAction | None = None
    named_fields: dict = field(default_factory=dict)
    loops: dict = field(default_factory=dict)
    flags: VerdictFlags = field(default_factory=VerdictFlags)

    def require_action(self):
        if self.action is None:
            raise ScenarioError("scenario declares no algebra action (lambda clauses)")
        return self.action

    def get_field(self, name):
        if name in self.named_fields:
            return self.named_fields[name]
        if self.action is not None and name in self.action.images:
            return self.action.image(name)
        raise ScenarioError(f"unknown field {name!r}")

    def get_loop(self, name):
        if name not in self.loops:
            raise ScenarioError(f"unknown loop {name!r}")
        return self.loops[name]


_VF_TERM = re.compile(r"d/d([A-Za-z_]\w*)")


def parse_vector_field(text: str, domain: SuperDomain) -> SuperVectorField:
    """`0` or a signed sum of `(coeff) d/d<coord>` terms."""
    text = text.strip()
    if text == "0":
        return SuperVectorField.zero(domain)
    coords = domain.even_coords + domain.odd_coords
    evens, odds = {}, {}
    pos = 0
    for m in _VF_TERM.finditer(text):
        coeff_text = text[pos : m.start()].strip()
        pos = m.end()
        if coeff_text in ("", "+"):
            coeff_text = "1"
        elif coeff_text == "-":
            coeff_text = "-1"
        elif coeff_text.startswith("+"):
            coeff_text = coeff_text[1:]
        name = m.group(1)
        if name not in coords:
            raise ScenarioError(f"unknown coordinate d/d{name}")
        sf = grassmannify(domain, ex.parse_expr(coeff_text, coords))
        target = evens if name in domain.even_coords else odds
        target[name] = target[name] + sf if name in target else sf
    if pos == 0:
        raise ScenarioError(f"not a vector field literal: {text!r}")
    tail = text[pos:].strip()
    if tail:
        raise ScenarioError(f"trailing junk after vector field: {tail!r}")
    return SuperVectorField(domain, evens, odds)


def _parse_number(text: str):
    e = ex.parse_expr(text.strip(), ())
    return ex.eval_expr(e, {}, "complex")


def _parse_bool(text: str, line_no):
    if text in ("true", "false"):
        return text == "true"
    raise ScenarioError(f"expected true/false, got {text!r}", line=line_no)


_LOOP_RE = re.compile(
    r"^(?P<name>\w+)\s+base\s+(?P<base>\S*)\s*segments\s+(?P<rest>.*)$"
)
_SEGMENT_RE = re.compile(
    r"\[\s*(?P<coeffs>[^;\]]+?),\s*t\s+in\s+\[\s*(?P<a>[^,\]]+),\s*(?P<b>[^\]]+)\]\s*\]"
)


class _Builder:
    def __init__(self, name):
        self.name = name
        self.scalar = "real"
        self.evens = []
        self.odds = []
        self.excluded = []
        self.algebra_name = None
        self.basis = []
        self.parities = []
        self.brackets = {}
        self.lambda_raw = {}
        self.fields_raw = {}
        self.loops_raw = {}
        self.flags = VerdictFlags()

    def finish(self) -> Scenario:
        domain = SuperDomain(
            tuple(self.evens), tuple(self.odds), self.scalar, tuple(self.excluded)
        )
        sc = Scenario(self.name, domain)
        if self.basis:
            sc.algebra = LieSuperAlgebra.build(self.basis, self.parities, self.brackets)
        if self.lambda_raw:
            if sc.algebra is None:
                raise ScenarioError("lambda clause requires basis declarations")
            images = {}
            for name, text in self.lambda_raw.items():
                if name not in self.basis:
                    raise ScenarioError(f"lambda for unknown basis element {name!r}")
                images[name] = parse_vector_field(text, domain)
            sc.action = InfinitesimalAction(sc.algebra, images)
        for name, text in self.fields_raw.items():
            sc.named_fields[name] = parse_vector_field(text, domain)
        for name, (base, segs, winding) in self.loops_raw.items():
            sc.loops[name] = GroupPath(segs, base, winding_note=winding)
        sc.flags = self.flags
        return sc


def parse_scenario(text: str, name: str = "<scenario>") -> Scenario:
    b = _Builder(name)
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            _parse_clause(b, line, line_no)
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError(str(exc), line=line_no)
    try:
        return b.finish()
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(str(exc))


def _parse_clause(b: _Builder, line: str, line_no: int):
    head, _, rest = line.partition(" ")
    rest = rest.strip()
    if head == "scalar":
        if rest not in ("real", "complex"):
            raise ScenarioError(f"scalar must be real or complex, got {rest!r}", line=line_no)
        b.scalar = rest
    elif head == "manifold":
        kind, _, names = rest.partition(" ")
        if kind == "even":
            b.evens.extend(names.split())
        elif kind == "odd":
            b.odds.extend(names.split())
        elif kind == "exclude":
            m = re.match(r"^(\w+)\s*!=\s*(.+)$", names.strip())
            if not m:
                raise ScenarioError("exclude syntax: manifold exclude <coord> != <value>", line=line_no)
            b.excluded.append((m.group(1), _parse_number(m.group(2))))
        else:
            raise ScenarioError(f"manifold clause must be even/odd/exclude, got {kind!r}", line=line_no)
    elif head == "algebra":
        b.algebra_name = rest
    elif head == "basis":
        parts = rest.split()
        if len(parts) != 2 or parts[1] not in ("even", "odd"):
            raise ScenarioError("basis syntax: basis <name> even|odd", line=line_no)
        b.basis.append(parts[0])
        b.parities.append(0 if parts[1] == "even" else 1)
    elif head == "bracket":
        m = re.match(r"^\[\s*(\w+)\s*,\s*(\w+)\s*\]\s*=\s*(.+)$", rest)
        if not m:
            raise ScenarioError("bracket syntax: bracket [a,b] = ...", line=line_no)
        a, c, rhs = m.group(1), m.group(2), m.group(3).strip()
        targets = {}
        if rhs != "0":
            for piece in re.split(r"\s*\+\s*", rhs):
                tm = re.match(r"^(?:\(([^)]*)\)|([-\d.ij]+))\s*\*\s*(\w+)$|^(\w+)$", piece.strip())
                if not tm:
                    raise ScenarioError(f"bad bracket term {piece!r}", line=line_no)
                if tm.group(4):
                    coeff, tgt = 1.0, tm.group(4)
                else:
                    coeff = _parse_number(tm.group(1) or tm.group(2))
                    tgt = tm.group(3)
                targets[tgt] = targets.get(tgt, 0) + coeff
        b.brackets[(a, c)] = targets
    elif head == "lambda":
        name, _, rhs = rest.partition("=")
        b.lambda_raw[name.strip()] = rhs.strip()
    elif head == "fields":
        name, _, rhs = rest.partition("=")
        b.fields_raw[name.strip()] = rhs.strip()
    elif head == "loop":
        m = _LOOP_RE.match(rest)
        if not m:
            raise ScenarioError(
                "loop syntax: loop <name> base k=v,... segments [...] [winding-note N]",
                line=line_no,
            )
        base = {}
        if m.group("base"):
            for kv in m.group("base").split(","):
                k, _, v = kv.partition("=")
                if not v:
                    raise ScenarioError(f"bad base assignment {kv!r}", line=line_no)
                base[k.strip()] = _parse_number(v)
        tail = m.group("rest")
        winding = None
        wm = re.search(r"winding-note\s+(-?\d+)\s*$", tail)
        if wm:
            winding = int(wm.group(1))
            tail = tail[: wm.start()]
        segs = []
        for sm in _SEGMENT_RE.finditer(tail):
            coeffs = {}
            for part in sm.group("coeffs").split(","):
                gen, _, etext = part.partition(":")
                if not etext:
                    raise ScenarioError(f"bad segment coefficient {part!r}", line=line_no)
                coeffs[gen.strip()] = ex.parse_expr(etext.strip(), ("t",))
            a = complex(_parse_number(sm.group("a")))
            bb = complex(_parse_number(sm.group("b")))
            if a.imag or bb.imag:
                raise ScenarioError("segment times must be real", line=line_no)
            segs.append(PathSegment(coeffs, a.real, bb.real))
        if not segs:
            raise ScenarioError("loop needs at least one segment", line=line_no)
        b.loops_raw[m.group("name")] = (base, segs, winding)
    elif head == "flags":
        mapping = {
            "reduced_global": "reduced_action_global",
            "simply_connected": "simply_connected",
            "support_compact": "support_compact",
            "global_flow_generators": "global_flow_generators",
        }
        for kv in rest.split():
            k, _, v = kv.partition("=")
            if k not in mapping:
                raise ScenarioError(f"unknown flag {k!r}", line=line_no)
            setattr(b.flags, mapping[k], _parse_bool(v, line_no))
    else:
        raise ScenarioError(f"unknown clause {head!r}", line=line_no)


# -- built-in scenarios -------------------------------------------------------

TWO_PI = "6.283185307179586"

_S1_EXAMPLE = f"""
# Circle acting on a purely odd superdomain; the holonomy of a winding-k
# loop shears theta2 by 2*pi*k*theta1.
scalar real
manifold odd theta1 theta2
algebra g
basis e even
bracket [e,e] = 0
lambda e = (theta1) d/dtheta2
loop k1 base  segments [e: 1, t in [0, {TWO_PI}]] winding-note 1
loop k2 base  segments [e: 1, t in [0, 2*{TWO_PI}]] winding-note 2
loop km1 base  segments [e: -1, t in [0, {TWO_PI}]] winding-note -1
loop k1_wobble base  segments [e: 1 + 0.3*sin(t), t in [0, {TWO_PI}]] winding-note 1
flags reduced_global=true simply_connected=false
"""


def _c_example(alpha: str, extra: str = "", punctured: bool = True) -> str:
    exclude = "manifold exclude z != 0" if punctured else ""
    return f"""
# Additive group acting on the complex superdomain through
# X_alpha = (1 + alpha(z) theta1 theta2) d/dz with alpha = {alpha}.
scalar complex
manifold even z
manifold odd theta1 theta2
{exclude}
algebra g
basis e even
bracket [e,e] = 0
lambda e = (1 + ({alpha})*theta1*theta2) d/dz
loop unit base z=1 segments [e: 1i*exp(1i*t), t in [0, {TWO_PI}]] winding-note 1
loop unit2 base z=1 segments [e: 1i*exp(1i*t), t in [0, 2*{TWO_PI}]] winding-note 2
loop wobble base z=1 segments [e: (0.1*cos(t) + 1i*(1 + 0.1*sin(t)))*exp(1i*t), t in [0, {TWO_PI}]] winding-note 1
{extra.strip()}
"""


BUILTINS = {
    "s1-example": _S1_EXAMPLE,
    "c-example": _c_example("1/z", "flags reduced_global=true simply_connected=false"),
    "c-example-invsq": _c_example(
        "1/z^2", "flags reduced_global=true simply_connected=false"
    ),
    "c-example-linear": _c_example(
        "z", "flags reduced_global=true simply_connected=false", punctured=False
    ),
    "c-example-zero": _c_example(
        "0", "flags reduced_global=true simply_connected=false", punctured=False
    ),
}


def load_scenario(ref: str) -> Scenario:
    """Load a built-in scenario by name or parse a scenario file."""
    if ref in BUILTINS:
        return parse_scenario(BUILTINS[ref], ref)
    try:
        with open(ref, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"no builtin or readable file {ref!r}: {exc}")
    return parse_scenario(text, ref)
