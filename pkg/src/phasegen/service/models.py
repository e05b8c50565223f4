"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..config import ScenarioDistributions, class_grid
from ..geometry import ArrayGeometry, default_ula, geometry_from_dict


class GeometryModel(BaseModel):
    """Array description; ``mics: null`` selects the default 4-mic ULA."""

    c: float = 343.0
    fs: float = 16000.0
    dft_len: int = Field(512, ge=2)
    mics: list[tuple[float, float, float]] | None = None

    def to_geometry(self) -> ArrayGeometry:
        if self.mics is None:
            return default_ula(c=self.c, fs=self.fs, dft_len=self.dft_len)
        return geometry_from_dict(self.model_dump())


class DistributionsModel(BaseModel):
    """Scenario sampling ranges; classes is (start, step, stop) in degrees."""

    classes: tuple[float, float, float] = (0.0, 5.0, 180.0)
    r: tuple[float, float] = (1.0, 3.0)
    snr_db: tuple[float, float] = (0.0, 30.0)
    drr_db: tuple[float, float] = (-9.0, 0.0)
    signal_law: str = "gaussian"

    def to_distributions(self) -> ScenarioDistributions:
        return ScenarioDistributions(
            theta_classes=class_grid(*self.classes),
            r_range=self.r,
            snr_range_db=self.snr_db,
            drr_range_db=self.drr_db,
            signal_law=self.signal_law,
        )


class HealthResponse(BaseModel):
    status: str
    version: str


class GenerateRequest(BaseModel):
    seed: int = 0
    batch_index: int = Field(0, ge=0)
    batch_size: int = Field(512, ge=1)
    frames_per_scenario: int = Field(1, ge=1)
    workers: int | None = Field(None, ge=1)
    geometry: GeometryModel = Field(default_factory=GeometryModel)
    distributions: DistributionsModel = Field(default_factory=DistributionsModel)


class ValidateRequest(BaseModel):
    seed: int = 0
    n_draws: int = Field(100_000, ge=100)
    geometry: GeometryModel = Field(default_factory=GeometryModel)
    distributions: DistributionsModel = Field(default_factory=DistributionsModel)


class CheckModel(BaseModel):
    check: str
    target: float
    estimate: float
    tolerance: float
    passed: bool = Field(serialization_alias="pass")


class ValidateResponse(BaseModel):
    passed: bool
    n_draws: int
    seed: int
    checks: list[CheckModel]


class EstimateRequest(BaseModel):
    """Dataset evaluation; the dataset is base64 of concatenated containers."""

    dataset_b64: str
    r_ref: float = Field(2.0, gt=0)
    block_size: int = Field(50, ge=1)
    include_records: bool = False
    classes: tuple[float, float, float] = (0.0, 5.0, 180.0)
    geometry: GeometryModel = Field(default_factory=GeometryModel)


class FrameRecord(BaseModel):
    class_true: int
    class_est: int
    scores: list[float]


class EstimateResponse(BaseModel):
    mae: float
    pacc: float
    mae50: float
    pacc50: float
    n_frames: int
    n_blocks: int
    records: list[FrameRecord] | None = None


class BenchRequest(BaseModel):
    batches: int = Field(4, ge=1)
    batch_size: int = Field(512, ge=1)
    frames_per_scenario: int = Field(1, ge=1)
    workers: int | None = Field(None, ge=1)
    seed: int = 0
    geometry: GeometryModel = Field(default_factory=GeometryModel)
    distributions: DistributionsModel = Field(default_factory=DistributionsModel)


class BenchResponse(BaseModel):
    batches: int
    batch_size: int
    workers: int
    factorize_ms: float
    total_s: float
    samples_per_sec: float
    per_sample_us: float
    per_batch_ms: float
