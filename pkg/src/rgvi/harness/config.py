"""Experiment configuration: a line-oriented ``key = value`` format with sections.

Example::

    [instance]
    name = bilinear_game
    seed = 0
    m = 10

    [method]
    scheme = primal
    order = 0
    max_iter = 500

    [output]
    path = traces/bilinear
    repetitions = 1

Floats are written with 17 significant digits, so a config written by
:func:`dump_config` parses back to an identical :class:`ExperimentConfig`.
"""

import configparser
import re
from dataclasses import dataclass, field, fields

from ..exceptions import ConfigError
from ..methods import SCHEMES, MethodConfig
from ..problems import list_problems, make_instance
from ..steps import StepConfig

__all__ = ["ExperimentConfig", "parse_config", "load_config", "dump_config", "format_float"]

_INT = re.compile(r"^[+-]?\d+$")
_FLOAT = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$|^[+-]?(inf|nan)$", re.IGNORECASE)

# [method] keys and their parsers; None-able keys accept "none" or an empty value.
_METHOD_KEYS = {
    "scheme": str, "order": int, "M": float, "max_iter": int, "log_every": int, "tol": float,
    "cert_threshold": float, "check_theorems": bool, "merit": str, "stepsize": float,
    "windows": "ints",
}
_OPTIONAL = {"M", "stepsize"}
_OUTPUT_KEYS = {"path": str, "repetitions": int}


def format_float(x):
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


@dataclass
class ExperimentConfig:
    """One experiment: a zoo instance, a scheme and where to write the trace.

    Attributes
    ----------
    problem : str
        Zoo name (see :func:`rgvi.problems.list_problems`).
    problem_params : dict
        Keyword arguments for the zoo constructor (``seed`` among them).
    scheme, order, M, max_iter, log_every, tol, cert_threshold, check_theorems,
    merit, stepsize, windows
        Method settings, as in :class:`rgvi.methods.MethodConfig`.
    path : str
        Output prefix; ``<path>.csv`` and ``<path>.gp`` are written.
    repetitions : int
    """

    problem: str
    problem_params: dict = field(default_factory=dict)
    scheme: str = "primal"
    order: int = 0
    M: float = None
    max_iter: int = 500
    log_every: int = 1
    tol: float = 0.0
    cert_threshold: float = 0.0
    check_theorems: bool = True
    merit: str = "auto"
    stepsize: float = None
    windows: tuple = ()
    path: str = "trace"
    repetitions: int = 1

    def __post_init__(self):
        if self.problem not in {name for name, _ in list_problems()}:
            raise ConfigError(f"unknown problem {self.problem!r}; see `rgvi list-problems`",
                              field="instance.name")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}", field="method.scheme")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1", field="output.repetitions")
        self.windows = tuple(int(w) for w in self.windows)

    def method_config(self):
        return MethodConfig(scheme=self.scheme, step=StepConfig(order=self.order, M=self.M),
                            max_iter=self.max_iter, log_every=self.log_every, tol=self.tol,
                            cert_threshold=self.cert_threshold,
                            check_theorems=self.check_theorems, merit=self.merit,
                            stepsize=self.stepsize, windows=self.windows)


def _parse_scalar(text):
    """Instance parameters: int, float, bool or bare string."""
    if _INT.match(text):
        return int(text)
    if _FLOAT.match(text):
        return float(text)
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _typed(kind, text, where, line):
    try:
        if kind == "ints":
            return tuple(int(s) for s in text.replace(",", " ").split())
        if kind is bool:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if kind is int:
            if not _INT.match(text):
                raise ValueError(text)
            return int(text)
        return kind(text)
    except ValueError:
        name = "list of integers" if kind == "ints" else kind.__name__
        raise ConfigError(f"cannot read {text!r} as {name}", field=where, line=line) from None


def _line_map(text):
    """``(section, key) -> line number`` for diagnostics."""
    out, section = {}, None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif "=" in s and not s.startswith(("#", ";")):
            out[(section, s.split("=", 1)[0].strip())] = i
    return out


def parse_config(text):
    """Parse config text into an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        With ``field`` (``section.key``) and ``line`` set where known.
    """
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", field=f"{exc.section}.{exc.option}",
                          line=exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section {exc.section!r}", field=exc.section,
                          line=exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line (expected key = value)", line=line) from None
    lines = _line_map(text)
    unknown = set(cp.sections()) - {"instance", "method", "output"}
    if unknown:
        sec = sorted(unknown)[0]
        raise ConfigError(f"unknown section [{sec}]", field=sec)
    if not cp.has_option("instance", "name"):
        raise ConfigError("missing instance name", field="instance.name")
    kwargs = {"problem": cp.get("instance", "name")}
    kwargs["problem_params"] = {k: _parse_scalar(v) for k, v in cp.items("instance") if k != "name"}
    for sec, table in (("method", _METHOD_KEYS), ("output", _OUTPUT_KEYS)):
        if not cp.has_section(sec):
            continue
        for key, val in cp.items(sec):
            where = f"{sec}.{key}"
            if key not in table:
                raise ConfigError(f"unknown key {key!r}", field=where, line=lines.get((sec, key)))
            if key in _OPTIONAL and val.strip().lower() in ("", "none"):
                kwargs[key] = None
                continue
            kwargs[key] = _typed(table[key], val.strip(), where, lines.get((sec, key)))
    try:
        cfg = ExperimentConfig(**kwargs)
        make_instance(cfg.problem, **cfg.problem_params)
        cfg.method_config()
    except ConfigError as exc:
        if exc.field == "problem":
            exc.field = "instance.name"
        elif exc.field == "params":
            exc.field = "instance"
        elif exc.field and "." not in exc.field:
            sec = "instance" if exc.field in kwargs["problem_params"] else "method"
            exc.field = f"{sec}.{exc.field}"
        if exc.line is None and exc.field and "." in exc.field:
            exc.line = lines.get(tuple(exc.field.split(".", 1)))
        raise
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(str(int(w)) for w in v)
    return str(v)


def dump_config(cfg):
    """Serialize ``cfg``; ``parse_config(dump_config(cfg)) == cfg``."""
    out = ["[instance]", f"name = {cfg.problem}"]
    out += [f"{k} = {_fmt(v)}" for k, v in sorted(cfg.problem_params.items())]
    out += ["", "[method]"]
    names = {f.name for f in fields(cfg)}
    out += [f"{k} = {_fmt(getattr(cfg, k))}" for k in _METHOD_KEYS if k in names]
    out += ["", "[output]"]
    out += [f"{k} = {_fmt(getattr(cfg, k))}" for k in _OUTPUT_KEYS]
    return "\n".join(out) + "\n"
