"""Plain-text problem recipes: INI sections with strict keys and lossless round trip.

Example::

    [problem]
    bc = dirichlet

    [weight]
    periodic = false
    pieces =
        0 9.42477796076938 sine amp=1 omega=1 phase=0

    [nonlinearity]
    kind = rational_square

    [parameters]
    lambda = 3
    mu = 10

Numbers accept ``pi`` and ``<number>*pi``; serialisation writes ``repr`` floats.
An ``[annulus]`` section (``N``, ``R1``, ``R2``, ``pieces`` in the radius) may
replace ``[weight]``.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigParseError

SECTIONS = {
    "problem": {"bc", "k"},
    "weight": {"periodic", "pieces"},
    "annulus": {"N", "R1", "R2", "pieces"},
    "nonlinearity": {"kind", "alpha", "beta", "s", "g"},
    "parameters": {"lambda", "mu", "rho", "r", "R", "c"},
    "run": {"seed", "attempts", "max_seg", "codes"},
}
BC_TAGS = ("periodic", "neumann", "dirichlet", "mixedLR", "mixedRL")
REQUIRED = {"problem": {"bc"}, "nonlinearity": {"kind"}, "parameters": {"lambda", "mu"}}
_PI_RE = re.compile(r"^\s*([-+]?[0-9.eE+-]*)\s*\*?\s*pi\s*$")


@dataclass(frozen=True)
class PieceSpec:
    t0: float
    t1: float
    kind: str
    params: tuple = ()

    def build(self):
        from .weight import make_piece

        return (self.t0, self.t1, make_piece(self.kind, **dict(self.params)))


@dataclass(frozen=True)
class ProblemConfig:
    bc: str
    pieces: tuple
    nonlinearity: str
    lam: float
    mu: float
    periodic: bool = False
    k: int = 1
    g_params: tuple = ()
    rho: Optional[float] = None
    r: Optional[float] = None
    R: Optional[float] = None
    c: float = 0.0
    seed: int = 0
    attempts: int = 4
    max_seg: Optional[float] = None
    codes: tuple = ()
    annulus: Optional[tuple] = None  # (N, R1, R2) when pieces live in the radius
    path: Optional[str] = field(default=None, compare=False)

    # -- builders ------------------------------------------------------------

    def weight(self):
        from .weight import Weight

        return Weight([p.build() for p in self.pieces], periodic=self.periodic)

    def g(self):
        from .nonlinearity import make_nonlinearity

        return make_nonlinearity(self.nonlinearity, **dict(self.g_params))

    def params(self):
        from .integrate import Params

        return Params(self.lam, self.mu, self.c)

    def annulus_problem(self):
        from .radial import AnnulusProblem

        if self.annulus is None:
            raise ConfigParseError("config has no [annulus] section", path=self.path)
        N, R1, R2 = self.annulus
        return AnnulusProblem(N, R1, R2, tuple(p.build() for p in self.pieces), self.g(), self.bc)

    def code_list(self):
        from .bvp import SymbolCode

        return [SymbolCode.parse(c) for c in self.codes] if self.codes else None


# ----------------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------------


def _key_lines(text: str) -> dict:
    """``(section, key) -> (line, column)`` for every assignment in the raw text."""
    out, section = {}, None
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;" or raw[:1].isspace():
            continue
        if s.startswith("["):
            section = s.strip("[]").strip()
            continue
        m = re.match(r"\s*([^=:\s]+)\s*[=:]", raw)
        if m and section is not None:
            out.setdefault((section, m.group(1)), (n, m.start(1) + 1))
    return out


def parse_number(text: str) -> float:
    s = text.strip()
    m = _PI_RE.match(s)
    if m:
        coef = m.group(1)
        return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    return float(s)


def parse_config(text: str, path: Optional[str] = None) -> ProblemConfig:
    cp = configparser.ConfigParser(interpolation=None, strict=True, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text, source=path or "<string>")
    except configparser.DuplicateOptionError as exc:
        raise ConfigParseError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, 1, path) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigParseError(f"duplicate section [{exc.section}]", exc.lineno, 1, path) from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("key outside any section", exc.lineno, 1, path) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigParseError("malformed line", line, 1, path) from exc

    where = _key_lines(text)
    sec_lines = {
        s.strip()[1:-1].strip(): n for n, s in enumerate(text.splitlines(), start=1) if s.strip().startswith("[")
    }

    def fail(msg, section, key=None):
        line, col = where.get((section, key), (sec_lines.get(section), 1))
        raise ConfigParseError(msg, line, col, path)

    for section in cp.sections():
        if section not in SECTIONS:
            fail(f"unknown section [{section}]", section)
        for key in cp[section]:
            if key not in SECTIONS[section]:
                fail(f"unknown key {key!r} in [{section}]", section, key)
    for section, keys in REQUIRED.items():
        if section not in cp:
            raise ConfigParseError(f"missing section [{section}]", None, None, path)
        for key in keys:
            if key not in cp[section]:
                fail(f"missing key {key!r}", section)
    has_w, has_a = "weight" in cp, "annulus" in cp
    if has_w == has_a:
        raise ConfigParseError("exactly one of [weight] or [annulus] is required", None, None, path)

    def get(section, key, conv, default=None):
        if section not in cp or key not in cp[section]:
            return default
        try:
            return conv(cp[section][key])
        except (ValueError, TypeError) as exc:
            fail(f"bad value for {key!r}: {exc}", section, key)

    if cp["problem"]["bc"].strip() not in BC_TAGS:
        fail(f"bc must be one of {', '.join(BC_TAGS)}", "problem", "bc")

    wsec = "weight" if has_w else "annulus"
    if "pieces" not in cp[wsec]:
        fail("missing key 'pieces'", wsec)
    line0 = where.get((wsec, "pieces"), (None, 1))[0]
    pieces = []
    for row in cp[wsec]["pieces"].splitlines():
        if not row.strip():
            continue
        try:
            pieces.append(_parse_piece(row))
        except ValueError as exc:
            raise ConfigParseError(f"bad piece {row.strip()!r}: {exc}", _piece_line(text, line0, row), 1, path) from exc
    if not pieces:
        fail("no pieces given", wsec, "pieces")

    annulus = None
    if has_a:
        for key in ("N", "R1", "R2"):
            if key not in cp["annulus"]:
                fail(f"missing key {key!r}", "annulus")
        annulus = (get("annulus", "N", int), get("annulus", "R1", parse_number), get("annulus", "R2", parse_number))

    g_params = []
    for key in ("alpha", "beta"):
        v = get("nonlinearity", key, parse_number)
        if v is not None:
            g_params.append((key, v))
    for key in ("s", "g"):
        v = get("nonlinearity", key, _number_list)
        if v is not None:
            g_params.append((key, v))

    codes = get("run", "codes", lambda s: tuple(c for c in re.split(r"[\s,]+", s.strip()) if c), ())
    return ProblemConfig(
        bc=get("problem", "bc", str.strip),
        pieces=tuple(pieces),
        nonlinearity=get("nonlinearity", "kind", str.strip),
        lam=get("parameters", "lambda", parse_number),
        mu=get("parameters", "mu", parse_number),
        periodic=get("weight", "periodic", _boolean, False),
        k=get("problem", "k", int, 1),
        g_params=tuple(g_params),
        rho=get("parameters", "rho", parse_number),
        r=get("parameters", "r", parse_number),
        R=get("parameters", "R", parse_number),
        c=get("parameters", "c", parse_number, 0.0),
        seed=get("run", "seed", int, 0),
        attempts=get("run", "attempts", int, 4),
        max_seg=get("run", "max_seg", parse_number),
        codes=codes,
        annulus=annulus,
        path=path,
    )


def load_config(path) -> ProblemConfig:
    path = str(path)
    with open(path) as fh:
        return parse_config(fh.read(), path)


def _parse_piece(row: str) -> PieceSpec:
    parts = row.split()
    if len(parts) < 3:
        raise ValueError("expected 't0 t1 kind [key=value ...]'")
    params = []
    for item in parts[3:]:
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"parameter {item!r} is not key=value")
        params.append((key, parse_number(val)))
    spec = PieceSpec(parse_number(parts[0]), parse_number(parts[1]), parts[2], tuple(sorted(params)))
    spec.build()
    return spec


def _piece_line(text, start, row):
    if start is None:
        return None
    lines = text.splitlines()
    for n in range(start, len(lines) + 1):
        if lines[n - 1].strip() == row.strip():
            return n
    return start


def _number_list(s: str) -> tuple:
    return tuple(parse_number(x) for x in re.split(r"[\s,]+", s.strip()) if x)


def _boolean(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# ----------------------------------------------------------------------------
# serialisation
# ----------------------------------------------------------------------------


def serialize_config(cfg: ProblemConfig) -> str:
    f = repr
    out = ["[problem]", f"bc = {cfg.bc}"]
    if cfg.k != 1:
        out.append(f"k = {cfg.k}")
    rows = [f"    {f(p.t0)} {f(p.t1)} {p.kind}" + "".join(f" {k}={f(v)}" for k, v in p.params) for p in cfg.pieces]
    if cfg.annulus is None:
        out += ["", "[weight]", f"periodic = {str(cfg.periodic).lower()}", "pieces ="] + rows
    else:
        N, R1, R2 = cfg.annulus
        out += ["", "[annulus]", f"N = {N}", f"R1 = {f(R1)}", f"R2 = {f(R2)}", "pieces ="] + rows
    out += ["", "[nonlinearity]", f"kind = {cfg.nonlinearity}"]
    for k, v in cfg.g_params:
        out.append(f"{k} = " + (" ".join(f(x) for x in v) if isinstance(v, tuple) else f(v)))
    out += ["", "[parameters]", f"lambda = {f(cfg.lam)}", f"mu = {f(cfg.mu)}"]
    for key, v in (("rho", cfg.rho), ("r", cfg.r), ("R", cfg.R)):
        if v is not None:
            out.append(f"{key} = {f(v)}")
    if cfg.c != 0.0:
        out.append(f"c = {f(cfg.c)}")
    out += ["", "[run]", f"seed = {cfg.seed}", f"attempts = {cfg.attempts}"]
    if cfg.max_seg is not None:
        out.append(f"max_seg = {f(cfg.max_seg)}")
    if cfg.codes:
        out.append("codes = " + " ".join(cfg.codes))
    return "\n".join(out) + "\n"
