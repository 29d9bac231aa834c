"""Experiment configuration: a single JSON document validated on load."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class GridBlock(_Block):
    period_L: float = Field(100 * math.pi, gt=0)
    modes_N: int = Field(4096, ge=8)

    @field_validator("modes_N")
    @classmethod
    def _even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("modes_N must be even")
        return v


class DispersionBlock(_Block):
    beta: float = 1.0
    gamma: float = 1.0
    cutoff_Xi0: float = Field(10.0, gt=0)
    lowhigh_ratio: float = Field(100.0, gt=1)


class EvolutionBlock(_Block):
    dt: float = Field(1e-4, gt=0)
    horizon_T: float = Field(1.0, gt=0)
    record_every: int = Field(100, ge=1)
    dt_check: list[float] = Field(default_factory=lambda: [5e-3, 2.5e-3, 1.25e-3])


class InitialBlock(_Block):
    kind: Literal["zero", "smooth", "nf_default", "random"] = "smooth"
    amplitude: float = 1.0


class SmoothingBlock(_Block):
    s: float = Field(0.0, gt=-0.75)
    delta: float = Field(0.01, gt=0)
    n_seeds: int = Field(8, ge=1)
    a_grid: list[float] = Field(default_factory=lambda: [0.25, 0.5])
    period_L: float = Field(128 * math.pi, gt=0)
    modes_N: int = Field(8192, ge=8)
    dt: float = Field(5e-5, gt=0)
    horizon_T: float = Field(0.5, gt=0)
    record_every: int = Field(1000, ge=1)
    xi_floor: float = Field(1.0, gt=0)
    gate: Literal["upturn", "energy"] = "upturn"


class PicardBlock(_Block):
    cases: list[Literal["gamma0", "gammaNeg1", "gammaPos1-control"]] = Field(
        default_factory=lambda: ["gamma0", "gammaNeg1", "gammaPos1-control"])
    s: float = 0.0
    a: float = Field(0.25, gt=0)
    N_list: list[float] = Field(default_factory=lambda: [16, 32, 64, 128, 256, 512])
    t: float = Field(1.0, gt=0)
    c: float = Field(0.02, gt=0)


class NfBlock(_Block):
    spacings: list[float] = Field(default_factory=lambda: [2e-3, 1e-3, 5e-4])
    n_snapshots: int = Field(11, ge=3)
    s: float = 0.0
    dt: float = Field(1e-4, gt=0)


class BscanBlock(_Block):
    s: float = Field(0.0, gt=-0.75)
    period_L: float = Field(16 * math.pi, gt=0)
    a_list: list[float] = Field(default_factory=lambda: [0.5, 0.75])
    N_list: list[int] = Field(default_factory=lambda: [1024, 2048, 4096, 8192])
    ensemble_size: int = Field(4, ge=1)
    sharp_N_list: list[float] = Field(default_factory=lambda: [16, 32, 64, 128, 256])
    sharp_refine: int = Field(4, ge=2)
    xi0_list: list[float] = Field(default_factory=lambda: [10.0])


class KdvBlock(_Block):
    gammas: list[float] = Field(default_factory=lambda: [1.0, 0.1, 0.01])
    horizon_T: float = Field(0.5, gt=0)

    @field_validator("gammas")
    @classmethod
    def _nonneg(cls, v):
        if any(g < 0 for g in v):
            raise ValueError("gammas must be >= 0")
        return v


class LemmaBlock(_Block):
    exponents: list[tuple[float, float]] = Field(
        default_factory=lambda: [(2.0, 0.6), (1.0, 0.5), (0.8, 0.4)])
    separations: list[float] = Field(default_factory=lambda: [0.0, 1.0, 10.0, 100.0, 1000.0])


class Thresholds(_Block):
    l2_drift: float = 1e-6
    temporal_order_min: float = 3.5
    nf_order: tuple[float, float] = (1.7, 2.3)
    nf_relative: float = 1e-3
    bscan_flat_factor: float = 2.0
    sharp_slope_min: float = 0.15
    gain_s0: tuple[float, float] = (0.30, 0.65)
    gain_s0_per_seed_min: float = 0.15
    picard_growth_slope_min: float = 0.15
    picard_control_slope_max: float = 0.05
    lemma_ratio_max: float = 3.0


class ExperimentConfig(_Block):
    grid: GridBlock = Field(default_factory=GridBlock)
    dispersion: DispersionBlock = Field(default_factory=DispersionBlock)
    evolution: EvolutionBlock = Field(default_factory=EvolutionBlock)
    initial: InitialBlock = Field(default_factory=InitialBlock)
    smoothing: SmoothingBlock = Field(default_factory=SmoothingBlock)
    picard: PicardBlock = Field(default_factory=PicardBlock)
    nf: NfBlock = Field(default_factory=NfBlock)
    bscan: BscanBlock = Field(default_factory=BscanBlock)
    kdv: KdvBlock = Field(default_factory=KdvBlock)
    lemma: LemmaBlock = Field(default_factory=LemmaBlock)
    thresholds: Thresholds = Field(default_factory=Thresholds)
    seed: int = Field(1, ge=0, lt=2**64)
    threads: int = Field(1, ge=1)
    out_dir: str | None = None

    @model_validator(mode="after")
    def _dt_list(self):
        if any(d <= 0 for d in self.evolution.dt_check):
            raise ValueError("evolution.dt_check entries must be positive")
        return self

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2)

    def hash(self) -> str:
        """Hash of the resolved config, excluding where the output goes."""
        d = self.model_dump(mode="json")
        d.pop("out_dir", None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``a.b.c=value`` overrides; values are parsed as JSON when possible."""
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValueError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = _coerce(raw)
    return data


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
    apply_overrides(data, overrides or [])
    return ExperimentConfig.model_validate(data)
