"""Experiment configuration: schema, validation, key = value files.

A config file is plain ``key = value`` lines; ``#`` starts a comment and
``mode`` selects the experiment.  Every artifact written by the CLI repeats
its configuration as ``# config.key = value`` lines above the table, and
those headers are valid config files, so an artifact can be regenerated
with ``mlrsa run --config artifact.csv``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

FORMATS = ("csv", "json")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class Field:
    kind: type
    default: Any
    help: str = ""
    check: Callable[[Any], str | None] | None = None
    choices: tuple | None = None


def _positive(v):
    return None if v > 0 else "must be > 0"


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _at_least(n):
    return lambda v: None if v >= n else f"must be >= {n}"


def _fraction(v):
    return None if 0 < v < 1 else "must lie in (0, 1)"


_SEED = Field(int, 0, "base seed; replication i uses stream i", _nonneg)
_K = Field(int, 2, "number of colors K", _at_least(1))
_SIGMA = Field(float, 1.0, "rod length / circle diameter", _positive)
_RATE = Field(float, 1.0, "arrival rate per unit length (1D) or area (2D) per unit time", _positive)
_SAMPLES = Field(int, 41, "number of sample times on [0, tau_max]", _at_least(2))

SCHEMAS: dict[str, dict[str, Field]] = {
    "sim1d": {
        "k": _K,
        "tau_max": Field(float, 10.0, "horizon as tau = rate*sigma*t", _positive),
        "length": Field(float, 1e4, "periodic domain length in units of sigma", _at_least(10)),
        "sigma": _SIGMA,
        "rate": _RATE,
        "samples": _SAMPLES,
        "replications": Field(int, 20, "independent replications", _at_least(1)),
        "assignment": Field(str, "random", "color rule", choices=("random", "sequential")),
        "seed": _SEED,
    },
    "sim2d": {
        "k": _K,
        "tau_max": Field(float, 20.0, "horizon as tau = rate*kappa*t", _positive),
        "side": Field(float, 100.0, "periodic square side in units of sigma", _at_least(10)),
        "sigma": _SIGMA,
        "rate": _RATE,
        "samples": _SAMPLES,
        "replications": Field(int, 10, "independent replications", _at_least(1)),
        "seed": _SEED,
    },
    "solve1d-iter": {
        "k": _K,
        "tau_max": Field(float, 10.0, "horizon as tau = rate*sigma*t", _positive),
        "sigma": _SIGMA,
        "rate": _RATE,
        "samples": _SAMPLES,
    },
    "solve1d-gap": {
        "k": _K,
        "tau_max": Field(float, 10.0, "horizon as tau = rate*sigma*t", _positive),
        "variant": Field(str, "auto", "admission factor", choices=("auto", "exact-K2", "generic-K")),
        "sigma": _SIGMA,
        "rate": _RATE,
        "samples": Field(int, 11, "number of sample times on [0, tau_max]", _at_least(2)),
        "points_per_sigma": Field(int, 200, "grid points per sigma", _at_least(10)),
        "rho0": Field(float, 0.01, "seed density per color, units of 1/sigma",
                      lambda v: None if 0 < v <= 0.02 else "must lie in (0, 0.02]"),
        "store_lmax": Field(float, 5.0, "largest gap length written out, units of sigma", _positive),
    },
    "solve2d": {
        "k": Field(int, 1, "number of colors K", _at_least(1)),
        "tau_max": Field(float, 20.0, "horizon as tau = rate*kappa*t", _positive),
        "samples": _SAMPLES,
        "bracket": Field(str, "cubed", "fit bracket: (1-x)^3 or (1-x^3)", choices=("cubed", "cube-arg")),
        "kinetic_constant": Field(float, 1.0, "c in dtheta/dtau = c*phi(theta)", _positive),
    },
    "plan-wifi": {
        "preset": Field(str, "", "2.4GHz (K=11) or 5GHz (K=23); overrides k",
                        choices=("", "2.4GHz", "5GHz")),
        "k": Field(int, 11, "number of orthogonal channels", _at_least(1)),
        "fraction": Field(float, 0.7, "target share of the jamming coverage", _fraction),
        "lambda_min": Field(float, 1e-4, "smallest AP density", _positive),
        "lambda_max": Field(float, 1e-2, "largest AP density", _positive),
        "points": Field(int, 25, "number of log-spaced densities", _at_least(2)),
    },
    "compare": {
        "dim": Field(int, 1, "1 (rods) or 2 (circles)", choices=(1, 2)),
        "k": _K,
        "tau_min": Field(float, 0.5, "first compared tau", _positive),
        "tau_max": Field(float, 10.0, "last compared tau", _positive),
        "samples": Field(int, 39, "number of compared times", _at_least(2)),
        "methods": Field(str, "iter,gap", "comma list from iter, gap (gap is 1D only)"),
        "variant": Field(str, "auto", "gap admission factor", choices=("auto", "exact-K2", "generic-K")),
        "size": Field(float, 0.0, "domain length/side in sigma; 0 picks 1e4 (1D) or 100 (2D)", _nonneg),
        "replications": Field(int, 20, "independent replications", _at_least(1)),
        "tol_iter": Field(float, 0.05, "max relative error allowed for iter", _positive),
        "tol_gap": Field(float, 0.03, "max relative error allowed for gap", _positive),
        "seed": _SEED,
    },
    "figure": {
        "id": Field(int, 5, "figure number", choices=(4, 5, 6, 7, 8, 9)),
        "replications": Field(int, 0, "0 uses the figure default", _nonneg),
        "size": Field(float, 0.0, "domain length/side in sigma; 0 uses the default", _nonneg),
        "seed": _SEED,
    },
}

MODES = tuple(SCHEMAS)


def _coerce(key: str, spec: Field, raw: Any) -> Any:
    try:
        if spec.kind is int:
            value = raw if isinstance(raw, int) and not isinstance(raw, bool) else int(str(raw).strip())
        elif spec.kind is float:
            value = float(raw)
        else:
            value = str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected {spec.kind.__name__}, got {raw!r}") from None
    if spec.choices is not None and value not in spec.choices:
        raise ConfigError(key, f"must be one of {', '.join(map(str, spec.choices))}; got {value!r}")
    if spec.check is not None:
        problem = spec.check(value)
        if problem:
            raise ConfigError(key, f"{problem}; got {value!r}")
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    params: dict = field(default_factory=dict)
    output: Path | None = None
    format: str = "csv"
    jobs: int = 1

    @classmethod
    def from_mapping(cls, mapping: dict, output=None, fmt: str | None = None,
                     jobs: int = 1) -> "ExperimentConfig":
        mapping = dict(mapping)
        mode = mapping.pop("mode", None)
        if mode not in SCHEMAS:
            raise ConfigError("mode", f"must be one of {', '.join(MODES)}; got {mode!r}")
        fmt = fmt or mapping.pop("format", "csv")
        mapping.pop("format", None)
        if fmt not in FORMATS:
            raise ConfigError("format", f"must be csv or json; got {fmt!r}")
        schema = SCHEMAS[mode]
        unknown = sorted(set(mapping) - set(schema))
        if unknown:
            raise ConfigError(unknown[0], f"unknown key for mode {mode}")
        params = {}
        for key, spec in schema.items():
            params[key] = _coerce(key, spec, mapping[key]) if key in mapping else spec.default
        if mode == "compare":
            methods = [m for m in params["methods"].split(",") if m]
            bad = [m for m in methods if m not in ("iter", "gap")]
            if bad or not methods:
                raise ConfigError("methods", f"choose from iter, gap; got {params['methods']!r}")
            if params["dim"] == 2 and "gap" in methods:
                raise ConfigError("methods", "gap method exists only for dim = 1")
            if params["tau_min"] >= params["tau_max"]:
                raise ConfigError("tau_min", "must be below tau_max")
        if mode == "plan-wifi" and params["lambda_min"] >= params["lambda_max"]:
            raise ConfigError("lambda_min", "must be below lambda_max")
        if mode == "solve1d-gap" and params["variant"] == "exact-K2" and params["k"] != 2:
            raise ConfigError("variant", "exact-K2 needs k = 2")
        if mode == "compare" and params["variant"] == "exact-K2" and params["k"] != 2:
            raise ConfigError("variant", "exact-K2 needs k = 2")
        if jobs < 1:
            raise ConfigError("jobs", "must be >= 1")
        return cls(mode, params, None if output is None else Path(output), fmt, jobs)

    def header_items(self) -> list[tuple[str, str]]:
        items = [("mode", self.mode), ("format", self.format)]
        items += [(k, format_value(v)) for k, v in self.params.items()]
        return items


def format_value(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_key_values(text: str) -> dict:
    """Read ``key = value`` lines; artifact headers (``# config.key = value``) also work."""
    out = {}
    artifact = any(line.startswith("# config.") for line in text.splitlines())
    for line in text.splitlines():
        s = line.strip()
        if artifact:
            if not s.startswith("# config."):
                continue
            s = s[len("# config."):]
        else:
            s = s.split("#", 1)[0].strip()
        if not s or "=" not in s:
            continue
        key, value = (p.strip() for p in s.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def load_config(path, output=None, fmt=None, jobs: int = 1) -> ExperimentConfig:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        import json

        data = json.loads(text)
        mapping = data.get("config", data)
    else:
        mapping = parse_key_values(text)
    return ExperimentConfig.from_mapping(mapping, output=output, fmt=fmt, jobs=jobs)
