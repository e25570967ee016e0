"""Run configuration: strict JSON schema, fail-closed.

Unknown keys are rejected everywhere.  Parse errors carry line/column;
validation errors carry a dotted field path.
"""
from __future__ import annotations

import json
import math
from typing import Literal, Union

import pydantic
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .cartan import CartanData, as_fraction, build_cartan
from .errors import ConfigError, ValidationError
from .identities import PolyField
from .solution import (
    SolutionParams,
    lambda_product_target,
    make_params,
    validate_params,
)

__all__ = ["ALL_CHECKS", "ConfigParseError", "RunConfig", "build_run", "load_config", "parse_config"]

ALL_CHECKS = ("construct", "residual", "mass", "expand", "linearize", "identities")



class ConfigParseError(ConfigError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)


class Grids(_Strict):
    residual_points: int = Field(50, ge=1)
    residual_rmin: float = Field(0.3, gt=0)
    residual_rmax: float = Field(5.0, gt=0)
    fd_step: float = Field(1e-3, gt=0)
    mass_R: float = Field(1e3, ge=10)
    mass_angles: int = Field(64, ge=8)
    expand_rmin: float = Field(1e3, gt=0)
    expand_rmax: float = Field(1e4, gt=0)
    expand_count: int = Field(9, ge=3)
    expand_angles: int = Field(16, ge=4)
    linearize_points: int = Field(30, ge=1)
    linearize_fd_step: float | None = Field(None, gt=0)
    param_step: float | None = Field(None, gt=0)
    ring_radius: float = Field(1e3, gt=10)
    ring_angles: int = Field(64, ge=8)
    green_R: float = Field(3.0, gt=0)
    green_pairs: int = Field(50, ge=1)
    ibp_R: float = Field(1e3, gt=1)


class Tolerances(_Strict):
    residual: float = Field(1e-6, gt=0)
    fd_order: float = 2.0
    lambda_product: float = Field(1e-12, gt=0)
    minors_vs_direct: float = Field(1e-8, gt=0)
    mass_rel: float = Field(1e-5, gt=0)
    closed_form_rel: float = Field(1e-8, gt=0)
    expand_S: float = Field(1e-6, gt=0)
    expand_leading_rel: float = Field(1e-4, gt=0)
    expand_first: float = Field(1e-3, gt=0)
    expand_absent: float = Field(1e-6, gt=0)
    linearized: float = Field(1e-5, gt=0)
    ring_amplitude_rel: float = Field(0.02, gt=0)
    ring_leak_rel: float = Field(1e-3, gt=0)
    ring_mismatch_rel: float = Field(1e-6, gt=0)
    control_ratio: float = Field(1e3, gt=1)
    green: float = Field(1e-12, gt=0)
    delta: float = Field(1e-6, gt=0)
    ibp_abs: float = Field(1e-5, gt=0)
    ibp_rel: float = Field(1e-3, gt=0)
    cross: float = Field(1e-4, gt=0)


class HbarField(_Strict):
    c: float = 0.0
    x: float = 0.0
    y: float = 0.0
    xx: float = 0.0
    xy: float = 0.0
    yy: float = 0.0

    def field(self) -> PolyField:
        return PolyField(**self.model_dump())


class RunConfig(_Strict):
    n: int = Field(ge=1, le=12)
    gamma: list[Union[float, str]]
    lambda_: Union[Literal["auto"], list[float]] = Field("auto", alias="lambda")
    normalize_lambda: bool = True
    c: dict[str, list[float]] = Field(default_factory=dict)
    cut_angle: float = math.pi
    seed: int = Field(0, ge=0, lt=2 ** 64)
    precision: Literal["double", "extended"] = "double"
    checks: list[Literal["construct", "residual", "mass", "expand", "linearize", "identities"]] = \
        Field(default_factory=lambda: list(ALL_CHECKS))
    grids: Grids = Field(default_factory=Grids)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    hbar: list[HbarField] | None = None
    csv: bool = True

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True, populate_by_name=True)

    @field_validator("c")
    @classmethod
    def _c_pairs(cls, v):
        for key, val in v.items():
            if len(val) != 2:
                raise ValueError(f"c entry {key!r} must be [re, im]")
        return v

    def to_dict(self) -> dict:
        d = self.model_dump(mode="json", by_alias=True)
        d["gamma"] = [str(as_fraction(g)) for g in self.gamma]
        return d


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ValidationError(f"duplicate key {k!r}", field=k)
        out[k] = v
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and schema-check configuration text."""
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"config parse error at line {exc.lineno} column {exc.colno}: {exc.msg}",
                               exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object", field="<root>")
    try:
        return RunConfig.model_validate(raw)
    except pydantic.ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(p) for p in err["loc"])
        raise ValidationError(f"invalid config field {loc}: {err['msg']}", field=loc) from None


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _parse_c_key(key: str, n: int):
    try:
        i, j = (int(p) for p in key.split(","))
    except ValueError:
        raise ValidationError(f"c key {key!r} must look like 'i,j'", field=f"c.{key}") from None
    if not 0 <= j < i <= n:
        raise ValidationError(f"c key {key!r} is not strictly lower triangular in 0..{n}",
                              field=f"c.{key}")
    return i, j


def build_run(cfg: RunConfig) -> tuple[CartanData, SolutionParams]:
    """Validate the mathematical content; raises ValidationError naming the field.

    Forbidden coefficients are always an error here.  With
    ``normalize_lambda`` lambda_0 is rescaled onto the product rule;
    otherwise an unmet product rule is an error.
    """
    n = cfg.n
    try:
        gamma = [as_fraction(g) for g in cfg.gamma]
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ValidationError(str(exc), field="gamma") from None
    cd = build_cartan(n, gamma)
    if cfg.lambda_ == "auto":
        lam = [lambda_product_target(cd) ** (1.0 / (n + 1))] * (n + 1)
    else:
        lam = [float(x) for x in cfg.lambda_]
        if len(lam) != n + 1:
            raise ValidationError(f"lambda must have {n + 1} entries", field="lambda")
    c = {}
    for key, (re, im) in cfg.c.items():
        c[_parse_c_key(key, n)] = complex(re, im)
    raw = make_params(n, lam, c)
    strict = validate_params(cd, raw, autonormalize=False)
    if not strict.normalized:
        if not cfg.normalize_lambda:
            raise ValidationError("lambda does not satisfy the product rule", field="lambda")
        strict = validate_params(cd, raw, autonormalize=True)
    if not all(math.isfinite(x) for x in (cfg.cut_angle,)):
        raise ValidationError("cut_angle must be finite", field="cut_angle")
    if cfg.grids.residual_rmin >= cfg.grids.residual_rmax:
        raise ValidationError("residual_rmin must be below residual_rmax", field="grids.residual_rmin")
    if cfg.grids.expand_rmax < 10 * cfg.grids.expand_rmin * (1 - 1e-12):
        raise ValidationError("expansion radii must span a decade", field="grids.expand_rmax")
    if cfg.hbar is not None and len(cfg.hbar) != n:
        raise ValidationError(f"hbar needs {n} fields", field="hbar")
    return cd, strict
