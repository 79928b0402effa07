"""Run configuration: INI-style ``key = value`` sections.

::

    [problem]
    alpha = 0.3
    beta = 0.2
    c = 1
    A = 1
    p = "r^-4"                      # expression, or "builtin:power C=1 sigma=4"
    q = "builtin:logpower C=1 sigma=4 tau=1"
    p_holder = 0.5                  # optional, recorded only

    [solver]                        # all optional
    n = 4097
    S_span = 10
    picard_tol = 1e-10
    max_iter = 200
    rel_tol = 1e-12
    res_tol = 1e-3

    [annulus]                       # optional section
    r_outer = 64
    n_r = 257
    n_theta = 64
    outer_tol = 1e-8
    lin_tol = 1e-10
    max_outer = 500
    n_theta_majorant = 4096

    [report]                        # optional section
    window_lo = 4
    window_hi = 64
    max_samples = 64
    prefix = ""

Values are Python literals; strings must be quoted.
"""

import ast
import configparser
from dataclasses import dataclass, field
import re

from .coeff import parse_field
from .errors import ConfigError, ExprSyntaxError
from .problem import ProblemSpec

_REQUIRED = object()

# key -> (type, default)
_SCHEMA = {
    "problem": {
        "alpha": (float, _REQUIRED),
        "beta": (float, _REQUIRED),
        "c": (float, _REQUIRED),
        "A": (float, _REQUIRED),
        "p": (str, _REQUIRED),
        "q": (str, _REQUIRED),
        "p_holder": (float, None),
        "q_holder": (float, None),
    },
    "solver": {
        "n": (int, 4097),
        "S_span": (float, None),
        "picard_tol": (float, 1e-10),
        "max_iter": (int, 200),
        "rel_tol": (float, 1e-12),
        "res_tol": (float, 1e-3),
    },
    "annulus": {
        "r_outer": (float, None),
        "n_r": (int, 257),
        "n_theta": (int, 64),
        "outer_tol": (float, 1e-8),
        "lin_tol": (float, 1e-10),
        "max_outer": (int, 500),
        "n_theta_majorant": (int, 4096),
    },
    "report": {
        "window_lo": (float, None),
        "window_hi": (float, None),
        "max_samples": (int, 64),
        "prefix": (str, ""),
    },
}

_POSITIVE = {
    "picard_tol", "rel_tol", "res_tol", "outer_tol", "lin_tol", "S_span", "r_outer",
    "n", "max_iter", "n_r", "n_theta", "max_outer", "n_theta_majorant", "max_samples",
}


@dataclass(frozen=True)
class SolverOptions:
    n: int = 4097
    S_span: float = None
    picard_tol: float = 1e-10
    max_iter: int = 200
    rel_tol: float = 1e-12
    res_tol: float = 1e-3


@dataclass(frozen=True)
class AnnulusOptions:
    r_outer: float = None
    n_r: int = 257
    n_theta: int = 64
    outer_tol: float = 1e-8
    lin_tol: float = 1e-10
    max_outer: int = 500
    n_theta_majorant: int = 4096


@dataclass(frozen=True)
class ReportOptions:
    window_lo: float = None
    window_hi: float = None
    max_samples: int = 64
    prefix: str = ""

    @property
    def window(self):
        if self.window_lo is None and self.window_hi is None:
            return None
        if self.window_lo is None or self.window_hi is None:
            raise ConfigError("window_lo and window_hi must be given together", key="window_lo")
        return (self.window_lo, self.window_hi)


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec
    solver: SolverOptions = field(default_factory=SolverOptions)
    annulus: AnnulusOptions = None
    report: ReportOptions = field(default_factory=ReportOptions)


def _key_lines(text):
    """(section, key) -> 1-based line number, for error messages."""
    lines = {}
    section = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), no)
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip()), no)
    return lines


def _coerce(kind, value, key, line):
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    raise ConfigError(f"expected {kind.__name__}, got {value!r}", line=line, key=key)


def parse_config(text, source="<config>"):
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), default_section="__none__"
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"cannot parse {source}: key outside any [section]",
                          line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line, bad = exc.errors[0]
        raise ConfigError(f"cannot parse {source}: expected 'key = value', got {bad.strip()!r}",
                          line=line) from None
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {source}: {exc.message}",
                          line=getattr(exc, "lineno", None)) from None
    lines = _key_lines(text)

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", line=lines.get((section, None)))
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key in [{section}]", line=line, key=key)
            try:
                literal = ast.literal_eval(raw.strip())
            except (ValueError, SyntaxError):
                raise ConfigError(
                    f"value {raw.strip()!r} is not a literal (quote strings)", line=line, key=key
                ) from None
            kind, _ = _SCHEMA[section][key]
            value = _coerce(kind, literal, key, line)
            if key in _POSITIVE and not value > 0:
                raise ConfigError("must be positive", line=line, key=key)
            values[(section, key)] = value

    def section_values(name):
        out = {}
        for key, (_, default) in _SCHEMA[name].items():
            if (name, key) in values:
                out[key] = values[(name, key)]
            elif default is _REQUIRED:
                raise ConfigError(f"missing required key in [{name}]", key=key)
            else:
                out[key] = default
        return out

    if "problem" not in parser:
        raise ConfigError("missing [problem] section")
    prob = section_values("problem")
    fields = {}
    for name in ("p", "q"):
        try:
            fields[name] = parse_field(prob[name], holder=prob[f"{name}_holder"])
        except (ExprSyntaxError, ValueError) as exc:
            raise ConfigError(str(exc), line=lines.get(("problem", name)), key=name) from None
    if not prob["alpha"] > 0:
        raise ConfigError("alpha must be > 0", line=lines.get(("problem", "alpha")), key="alpha")
    if not prob["beta"] > 0:
        raise ConfigError("beta must be > 0", line=lines.get(("problem", "beta")), key="beta")
    if not prob["alpha"] + prob["beta"] < 1:
        raise ConfigError("alpha+beta must be < 1", line=lines.get(("problem", "beta")), key="beta")
    if not prob["c"] >= 1:
        raise ConfigError("c must be >= 1", line=lines.get(("problem", "c")), key="c")
    if not prob["A"] > 0:
        raise ConfigError("A must be > 0", line=lines.get(("problem", "A")), key="A")
    problem = ProblemSpec(prob["alpha"], prob["beta"], prob["c"], prob["A"],
                          fields["p"], fields["q"])

    solver = SolverOptions(**section_values("solver"))
    if solver.n < 65:
        raise ConfigError("n must be at least 65", line=lines.get(("solver", "n")), key="n")
    annulus = AnnulusOptions(**section_values("annulus")) if "annulus" in parser else None
    if annulus is not None and (annulus.n_r < 17 or annulus.n_theta < 16 or annulus.n_theta % 2):
        raise ConfigError("annulus grid needs n_r >= 17 and even n_theta >= 16",
                          line=lines.get(("annulus", "n_r")), key="n_r")
    report = ReportOptions(**section_values("report"))
    report.window  # validates pairing
    return RunConfig(problem, solver, annulus, report)


def load_config(path):
    """Read and validate a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, source=str(path))
