"""Problem files (``.vp``) and result writers.

A file is a sequence of ``;``-terminated statements and ``{}`` sections;
``#`` starts a comment and whitespace is insignificant::

    vars x in [-1, 1];
    params a in [-1, 1];
    measure lebesgue on x;
    set S1 { 0.25 - a^2 - x^2 >= 0; }
    set S2 { 0.09 - a^2 - 0.8 a - x^2 >= 0; }
    options { d = 7; r = 6; eps_a = 0.05; eps_k = 0.01; }

``vars x[3] in [-1, 1]^3`` declares ``x1, x2, x3``; a box may also be a
product ``[l1, h1] * [l2, h2]``.  Application files replace the two sets by
one of the sections ``roa``, ``invariant``, ``probctrl`` or ``gsos`` (see
``format_problem_file`` output for the exact layout).  ``probctrl`` files
also declare ``inputs``, ``uncertain`` and ``noise`` variables.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .applications import (
    ControlSpec,
    PolynomialDynamics,
    TemplateFunction,
    build_gsos,
    build_invariant,
    build_probctrl,
    build_roa,
)
from .moments import MeasureSpec
from .poly import Polynomial, PolynomialSyntaxError, UnknownIdentifierError, parse_polynomial
from .problem import Hierarchy, SemialgebraicSet, VariableBlocks, VolumeProblem

OPTION_KEYS = {"d": int, "r": int, "eps_a": float, "eps_k": float, "d_w": int}
APP_KINDS = ("roa", "invariant", "probctrl", "gsos")


class VpSyntaxError(ValueError):
    """Malformed problem file; ``line`` and ``col`` are 1-based."""

    def __init__(self, message: str, line: int = 1, col: int = 1, source: str = "<input>"):
        self.line, self.col, self.source = line, col, source
        self.detail = message
        super().__init__(f"{source}:{line}:{col}: {message}")


class VpUnknownIdentifier(VpSyntaxError):
    def __init__(self, name: str, line: int, col: int, source: str = "<input>"):
        self.name = name
        super().__init__(f"unknown identifier '{name}'", line, col, source)


@dataclass(frozen=True)
class VarGroup:
    names: tuple
    lower: tuple
    upper: tuple


@dataclass(frozen=True)
class ProblemFile:
    """Abstract content of a ``.vp`` file, independent of its layout."""

    x: VarGroup
    a: VarGroup = VarGroup((), (), ())
    measure: str = "lebesgue"
    s1: tuple = ()
    s2: tuple = ()
    options: tuple = ()  # sorted (key, value) pairs
    app: str | None = None
    app_fields: tuple = ()  # sorted (key, value) pairs, values hashable
    inputs: tuple = ()
    uncertain: VarGroup = VarGroup((), (), ())
    noise: VarGroup = VarGroup((), (), ())

    @property
    def joint_names(self) -> tuple:
        return self.x.names + self.a.names

    @property
    def dynamics_names(self) -> tuple:
        return self.x.names + self.inputs + self.noise.names + self.uncertain.names

    def option(self, key, default=None):
        return dict(self.options).get(key, default)

    def field(self, key, default=None):
        return dict(self.app_fields).get(key, default)

    def hierarchy(self) -> Hierarchy:
        return Hierarchy(**dict(self.options))


# ---------------------------------------------------------------- scanning


class _Scanner:
    def __init__(self, text: str, source: str):
        # blank out comments so offsets stay valid
        self.text = re.sub(r"#[^\n]*", lambda m: " " * len(m.group()), text)
        self.source = source
        self.pos = 0

    def where(self, pos: int | None = None):
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def error(self, message: str, pos: int | None = None):
        return VpSyntaxError(message, *self.where(pos), self.source)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip()
        return self.pos >= len(self.text)

    def peek(self, token: str) -> bool:
        self.skip()
        if not self.text.startswith(token, self.pos):
            return False
        end = self.pos + len(token)
        if token[-1].isalnum() and end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
            return False
        return True

    def expect(self, token: str):
        if not self.peek(token):
            found = self.text[self.pos : self.pos + 12].split("\n")[0] or "end of file"
            raise self.error(f"expected '{token}', found '{found}'")
        self.pos += len(token)

    def accept(self, token: str) -> bool:
        if self.peek(token):
            self.pos += len(token)
            return True
        return False

    def word(self, what: str = "identifier") -> str:
        self.skip()
        m = re.compile(r"[A-Za-z_][A-Za-z_0-9]*").match(self.text, self.pos)
        if not m:
            raise self.error(f"expected {what}")
        self.pos = m.end()
        return m.group()

    def number(self) -> float:
        self.skip()
        m = re.compile(r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?|[-+]?inf").match(self.text, self.pos)
        if not m:
            raise self.error("expected a number")
        self.pos = m.end()
        return float(m.group())

    def integer(self) -> int:
        start = self.pos
        v = self.number()
        if v != int(v):
            raise self.error("expected an integer", start)
        return int(v)

    def chunk(self, stops: str) -> tuple[int, str]:
        """Raw text up to the first stop character outside parentheses."""
        self.skip()
        start, depth = self.pos, 0
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif depth == 0 and ch in stops:
                break
            self.pos += 1
        if self.pos >= len(self.text):
            raise self.error(f"unterminated expression, expected one of {' '.join(stops)}", start)
        return start, self.text[start : self.pos]

    def poly(self, start: int, text: str, names, env=None) -> Polynomial:
        lead = len(text) - len(text.lstrip())
        if not text.strip():
            raise self.error("empty expression", start)
        try:
            return parse_polynomial(text, names, env)
        except UnknownIdentifierError as exc:
            raise VpUnknownIdentifier(exc.name, *self.where(start + exc.offset), self.source) from None
        except PolynomialSyntaxError as exc:
            raise self.error(str(exc), start + max(exc.offset, lead)) from None


# ---------------------------------------------------------------- parsing


def _declaration(sc: _Scanner) -> VarGroup:
    names = []
    while True:
        base = sc.word("variable name")
        if sc.accept("["):
            k = sc.integer()
            sc.expect("]")
            if k < 1:
                raise sc.error("variable count must be positive")
            names += [f"{base}{i + 1}" for i in range(k)]
        else:
            names.append(base)
        if not sc.accept(","):
            break
    if not sc.peek("in"):
        raise sc.error(f"box missing for {', '.join(names)}")
    sc.expect("in")
    lo, hi = [], []
    while True:
        sc.expect("[")
        l = sc.number()
        sc.expect(",")
        h = sc.number()
        sc.expect("]")
        if l >= h:
            raise sc.error("box needs lower < upper")
        rep = sc.integer() if sc.accept("^") else None
        if rep is not None:
            lo += [l] * rep
            hi += [h] * rep
        else:
            lo.append(l)
            hi.append(h)
        if not sc.accept("*"):
            break
    if len(lo) == 1:
        lo, hi = lo * len(names), hi * len(names)
    if len(lo) != len(names):
        raise sc.error(f"box has {len(lo)} coordinates for {len(names)} variables")
    sc.expect(";")
    return VarGroup(tuple(names), tuple(lo), tuple(hi))


def _merge(a: VarGroup, b: VarGroup) -> VarGroup:
    return VarGroup(a.names + b.names, a.lower + b.lower, a.upper + b.upper)


def _inequalities(sc: _Scanner, names) -> tuple:
    sc.expect("{")
    out = []
    while not sc.accept("}"):
        start, lhs = sc.chunk("<>;}")
        if not sc.peek(">=") and not sc.peek("<="):
            raise sc.error("expected '>=' or '<=' in inequality")
        flip = sc.peek("<=")
        sc.pos += 2
        rstart, rhs = sc.chunk(";}")
        sc.expect(";")
        p = sc.poly(start, lhs, names) - sc.poly(rstart, rhs, names)
        out.append(-p if flip else p)
    return tuple(out)


def _expr_list(sc: _Scanner, names) -> tuple:
    sc.expect("[")
    out = []
    while True:
        start, text = sc.chunk(",]")
        out.append(sc.poly(start, text, names))
        if sc.accept("]"):
            return tuple(out)
        sc.expect(",")


def _app_section(sc: _Scanner, kind: str, pf: dict) -> tuple:
    x, a = pf["x"], pf["a"]
    joint = x.names + a.names
    dyn_names = x.names + pf["inputs"] + pf["noise"].names + pf["uncertain"].names
    fields = {}
    sc.expect("{")
    while not sc.accept("}"):
        key_pos = sc.pos
        key = sc.word("field name")
        if kind == "probctrl" and key in ("target", "feasible"):
            fields[key] = _inequalities(sc, x.names)
            continue
        sc.expect("=")
        if key == "f":
            fields["f"] = _expr_list(sc, dyn_names)
        elif key in ("level", "eps_r") and kind == "roa":
            fields[key] = sc.number()
        elif key == "mode" and kind in ("roa", "invariant"):
            fields[key] = sc.word("mode")
            if fields[key] not in ("continuous", "discrete"):
                raise sc.error("mode must be continuous or discrete", key_pos)
        elif key == "horizon" and kind == "probctrl":
            fields[key] = sc.integer()
        elif (kind == "roa" and key == "V") or (kind == "invariant" and key == "P") or (kind == "gsos" and key == "target"):
            start, text = sc.chunk(";")
            fields[key] = sc.poly(start, text, joint)
        elif kind == "probctrl" and key in pf["inputs"]:
            start, text = sc.chunk(";")
            fields[key] = sc.poly(start, text, joint)
        else:
            raise sc.error(f"unknown field '{key}' in {kind} section", key_pos)
        sc.expect(";")
    required = {"roa": ("f", "V"), "invariant": ("f", "P"), "gsos": ("target",),
                "probctrl": ("f", "horizon", "target") + pf["inputs"]}[kind]
    for key in required:
        if key not in fields:
            raise sc.error(f"{kind} section lacks '{key}'")
    return tuple(sorted(fields.items()))


def parse_problem_text(text: str, source: str = "<input>") -> ProblemFile:
    sc = _Scanner(text, source)
    if sc.at_end():
        raise VpSyntaxError("empty problem file", 1, 1, source)
    empty = VarGroup((), (), ())
    pf = {"x": empty, "a": empty, "inputs": (), "uncertain": empty, "noise": empty, "measure": "lebesgue",
          "s1": None, "s2": None, "options": {}, "app": None, "app_fields": ()}
    seen_measure = False
    while not sc.at_end():
        pos = sc.pos
        kw = sc.word("statement keyword")
        if kw in ("vars", "params", "uncertain", "noise"):
            if pf["s1"] is not None or pf["app"] is not None:
                raise sc.error("declarations must precede sets and sections", pos)
            key = {"vars": "x", "params": "a"}.get(kw, kw)
            pf[key] = _merge(pf[key], _declaration(sc))
        elif kw == "inputs":
            names = [sc.word("input name")]
            while sc.accept(","):
                names.append(sc.word("input name"))
            sc.expect(";")
            pf["inputs"] += tuple(names)
        elif kw == "measure":
            if seen_measure:
                raise sc.error("duplicate measure statement", pos)
            kind = sc.word("measure kind")
            if kind not in ("lebesgue", "uniform"):
                raise sc.error(f"unknown measure '{kind}'", pos)
            sc.expect("on")
            sc.expect("x")
            sc.expect(";")
            pf["measure"], seen_measure = kind, True
        elif kw == "set":
            if not pf["x"].names:
                raise sc.error("sets need a preceding vars declaration", pos)
            label = sc.word("set name")
            if label not in ("S1", "S2"):
                raise sc.error(f"set must be S1 or S2, not '{label}'", pos)
            key = label.lower()
            if pf[key] is not None:
                raise sc.error(f"duplicate set {label}", pos)
            pf[key] = _inequalities(sc, pf["x"].names + pf["a"].names)
        elif kw == "options":
            sc.expect("{")
            while not sc.accept("}"):
                kpos = sc.pos
                key = sc.word("option name")
                if key not in OPTION_KEYS:
                    raise sc.error(f"unknown option '{key}'", kpos)
                sc.expect("=")
                pf["options"][key] = sc.integer() if OPTION_KEYS[key] is int else sc.number()
                sc.expect(";")
        elif kw in APP_KINDS:
            if pf["app"] is not None:
                raise sc.error("only one application section is allowed", pos)
            if not pf["x"].names:
                raise sc.error(f"{kw} section needs a preceding vars declaration", pos)
            pf["app"] = kw
            pf["app_fields"] = _app_section(sc, kw, pf)
        else:
            raise sc.error(f"unknown statement '{kw}'", pos)
    if not pf["x"].names:
        raise VpSyntaxError("no vars declaration", 1, 1, source)
    if pf["app"] in ("roa", "invariant", "probctrl") and (pf["s1"] is not None or pf["s2"] is not None):
        raise VpSyntaxError(f"{pf['app']} files derive their sets; remove the set sections", 1, 1, source)
    if pf["app"] is None and pf["s1"] is None:
        raise VpSyntaxError("set S1 is missing", *sc.where(), source)
    try:
        Hierarchy(**pf["options"])
    except ValueError as exc:
        raise VpSyntaxError(str(exc), 1, 1, source) from None
    return ProblemFile(
        x=pf["x"], a=pf["a"], measure=pf["measure"], s1=pf["s1"] or (), s2=pf["s2"] or (),
        options=tuple(sorted(pf["options"].items())), app=pf["app"], app_fields=pf["app_fields"],
        inputs=pf["inputs"], uncertain=pf["uncertain"], noise=pf["noise"],
    )


def parse_problem_file(path) -> ProblemFile:
    with open(path, encoding="utf-8") as fh:
        return parse_problem_text(fh.read(), str(path))


# ---------------------------------------------------------------- formatting


def _num(v) -> str:
    return str(v) if isinstance(v, int) else repr(float(v))


def _box_text(g: VarGroup) -> str:
    if len(set(g.lower)) == 1 and len(set(g.upper)) == 1:
        return f"[{_num(g.lower[0])}, {_num(g.upper[0])}]"
    return " * ".join(f"[{_num(l)}, {_num(h)}]" for l, h in zip(g.lower, g.upper))


def _decl(kw: str, g: VarGroup) -> str:
    return f"{kw} {', '.join(g.names)} in {_box_text(g)};"


def _ineqs(polys, names, indent="  ") -> list[str]:
    return [f"{indent}{p.to_string(names)} >= 0;" for p in polys]


def format_problem_file(pf: ProblemFile) -> str:
    joint = pf.joint_names
    out = [_decl("vars", pf.x)]
    if pf.a.names:
        out.append(_decl("params", pf.a))
    if pf.inputs:
        out.append(f"inputs {', '.join(pf.inputs)};")
    if pf.uncertain.names:
        out.append(_decl("uncertain", pf.uncertain))
    if pf.noise.names:
        out.append(_decl("noise", pf.noise))
    out.append(f"measure {pf.measure} on x;")
    if pf.app is None or pf.app == "gsos":
        out += ["set S1 {"] + _ineqs(pf.s1, joint) + ["}"]
        if pf.s2:
            out += ["set S2 {"] + _ineqs(pf.s2, joint) + ["}"]
    if pf.app is not None:
        f = dict(pf.app_fields)
        out.append(f"{pf.app} {{")
        dyn = pf.dynamics_names
        for key, val in sorted(f.items()):
            if key == "f":
                out.append("  f = [" + ", ".join(p.to_string(dyn) for p in val) + "];")
            elif key in ("target", "feasible") and pf.app == "probctrl":
                out += [f"  {key} {{"] + _ineqs(val, pf.x.names, "    ") + ["  }"]
            elif isinstance(val, Polynomial):
                out.append(f"  {key} = {val.to_string(joint)};")
            elif isinstance(val, str):
                out.append(f"  {key} = {val};")
            else:
                out.append(f"  {key} = {_num(val)};")
        out.append("}")
    if pf.options:
        out.append("options { " + " ".join(f"{k} = {_num(v)};" for k, v in pf.options) + " }")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- building


def _x_measure(pf: ProblemFile) -> MeasureSpec:
    ctor = MeasureSpec.lebesgue if pf.measure == "lebesgue" else MeasureSpec.uniform
    return ctor(pf.x.lower, pf.x.upper)


def _boxes(pf: ProblemFile):
    return (pf.x.lower, pf.x.upper), (pf.a.lower, pf.a.upper)


def dynamics_of(pf: ProblemFile) -> PolynomialDynamics:
    f = pf.field("f")
    mode = pf.field("mode", "discrete" if pf.app in ("invariant", "probctrl") else "continuous")
    return PolynomialDynamics(f, mode, n_u=len(pf.inputs), n_w=len(pf.noise.names), n_d=len(pf.uncertain.names))


def control_spec_of(pf: ProblemFile) -> ControlSpec:
    """Gains must be used input by input in declaration order."""
    n_x, n_a = len(pf.x.names), len(pf.a.names)
    controller, next_gain = [], 0
    for u in pf.inputs:
        tpl = TemplateFunction.from_joint(pf.field(u), n_x)
        if tpl.fixed.degree > 0 or any(c for _, c in tpl.fixed.items()):
            raise ValueError(f"control law for {u} must be a gain combination without a fixed part")
        used = [i for i, b in enumerate(tpl.basis) if b.items()]
        if used != list(range(next_gain, next_gain + len(used))):
            raise ValueError(f"control law for {u} must use the next gains in order")
        controller.append(tuple(tpl.basis[i] for i in used))
        next_gain += len(used)
    if next_gain != n_a:
        raise ValueError(f"control laws use {next_gain} gains, {n_a} declared")
    mu_x0 = _x_measure(pf)
    mu_d = MeasureSpec.uniform(pf.uncertain.lower, pf.uncertain.upper) if pf.uncertain.names else None
    mu_w = MeasureSpec.uniform(pf.noise.lower, pf.noise.upper) if pf.noise.names else None
    N = pf.field("horizon")
    x_names = pf.x.names + pf.uncertain.names + tuple(f"{w}_{k}" for k in range(N) for w in pf.noise.names)
    return ControlSpec(N, pf.field("target"), tuple(controller), pf.field("feasible", ()), mu_x0, mu_d, mu_w,
                       (pf.a.lower, pf.a.upper), (x_names, pf.a.names))


def build_problem(pf: ProblemFile, **hierarchy_overrides) -> VolumeProblem:
    opts = dict(pf.options)
    opts.update({k: v for k, v in hierarchy_overrides.items() if v is not None})
    h = Hierarchy(**opts)
    x_box, a_box = _boxes(pf)
    names = (pf.x.names, pf.a.names)
    if pf.app == "roa":
        tpl = TemplateFunction.from_joint(pf.field("V"), len(pf.x.names))
        prob = build_roa(dynamics_of(pf), tpl, pf.field("level", 1.0), pf.field("eps_r", 1e-3), x_box, a_box, h,
                         names=names)
    elif pf.app == "invariant":
        tpl = TemplateFunction.from_joint(pf.field("P"), len(pf.x.names))
        prob = build_invariant(dynamics_of(pf), tpl, x_box, a_box, h, names=names)
    elif pf.app == "probctrl":
        return build_probctrl(dynamics_of(pf), control_spec_of(pf), h)
    elif pf.app == "gsos":
        prob = build_gsos(pf.field("target"), pf.s1, len(pf.x.names), x_box, a_box, h, names=names)
    else:
        return VolumeProblem(VariableBlocks(*names), SemialgebraicSet(pf.s1), SemialgebraicSet(pf.s2), x_box,
                             a_box if pf.a.names else (-1.0, 1.0), _x_measure(pf), h, "problem")
    prob.mu_x = _x_measure(pf)
    return prob


def load_problem(path, **hierarchy_overrides) -> VolumeProblem:
    return build_problem(parse_problem_file(path), **hierarchy_overrides)


# ---------------------------------------------------------------- results


def to_jsonable(v):
    if isinstance(v, dict):
        return {str(k): to_jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return to_jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
