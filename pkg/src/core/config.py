"""
Application configuration settings.
"""

from typing import Any, Dict, List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables
load_dotenv()


class Settings(BaseSettings):
    """Process-wide defaults, overridable through MMSLAB_* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="MMSLAB_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    # Application
    PROJECT_NAME: str = "mmslab"
    VERSION: str = "0.1.0"

    # Logging
    LOG_LEVEL: str = "WARNING"
    LOG_FORMAT: Literal["console", "json"] = "console"

    # Parallelism cap for per-point work
    THREADS: int = 1

    # Scale ladder
    LADDER_RATIO: float = 0.75
    WINDOW_LO: float = 1.0
    WINDOW_HI: float = 16.0

    # Tolerances
    DEPENDENCE_TOL: float = 1e-3
    RESIDUAL_TOL: float = 1e-6
    RANK_TOL: float = 1e-9

    # Atlas search (dependence is tested at the finest scales only)
    ATLAS_WINDOW_HI: float = 2.0
    ATLAS_DEPENDENCE_TOL: float = 0.2
    ATLAS_RESIDUAL_TOL: float = 0.25
    MAX_TUPLE: int = 5

    # Mass thresholds
    MASS_FRACTION: float = 0.95
    MIN_PATCH_MASS: float = 0.02
    SLACK: float = 0.05

    # Poincaré estimation and doubling constants (no center count: every point)
    PI_P: float = 1.0
    DILATION: float = 2.0
    CENTERS: Optional[int] = None

    # ε-paths
    PAIRS: int = 20
    MAX_ROUNDS: int = 50

    # Blow-ups
    VIEW_RADII: List[float] = [1.0, 2.0]
    VIEW_SPACING: float = 0.5

    # Validation of distance matrices
    TRIANGLE_EXHAUSTIVE_LIMIT: int = 512
    TRIANGLE_SAMPLES: int = 20000

    # Output
    FLOAT_DIGITS: int = 12

    SEED: int = 0


settings = Settings()


class RunConfig(BaseModel):
    """Fully resolved configuration of a single CLI run."""

    # Input and ladder
    space_path: Optional[str] = None
    r_max: Optional[float] = None
    ratio: float = Field(default_factory=lambda: settings.LADDER_RATIO)
    floor: Optional[float] = None
    window_lo: float = Field(default_factory=lambda: settings.WINDOW_LO)
    window_hi: float = Field(default_factory=lambda: settings.WINDOW_HI)

    # Field specs as given on the command line
    function: Optional[str] = None
    dictionary: Optional[str] = None

    # Tolerances
    dependence_tol: float = Field(default_factory=lambda: settings.DEPENDENCE_TOL)
    residual_tol: float = Field(default_factory=lambda: settings.RESIDUAL_TOL)
    rank_tol: float = Field(default_factory=lambda: settings.RANK_TOL)

    # Atlas
    atlas_window_hi: float = Field(default_factory=lambda: settings.ATLAS_WINDOW_HI)
    atlas_dependence_tol: float = Field(
        default_factory=lambda: settings.ATLAS_DEPENDENCE_TOL
    )
    atlas_residual_tol: float = Field(
        default_factory=lambda: settings.ATLAS_RESIDUAL_TOL
    )
    max_tuple: int = Field(default_factory=lambda: settings.MAX_TUPLE)
    mass_fraction: float = Field(default_factory=lambda: settings.MASS_FRACTION)
    min_patch_mass: float = Field(default_factory=lambda: settings.MIN_PATCH_MASS)
    slack: float = Field(default_factory=lambda: settings.SLACK)
    strict: bool = False

    # Poincaré and doubling; centers=None evaluates every point
    p: float = Field(default_factory=lambda: settings.PI_P)
    dilation: float = Field(default_factory=lambda: settings.DILATION)
    centers: Optional[int] = Field(default_factory=lambda: settings.CENTERS)

    # Lipschitz profiles
    good_eps: Optional[float] = None
    good_ratio: float = 2.0

    # ε-paths
    eps: Optional[float] = None
    source: Optional[int] = None
    target: Optional[int] = None
    pairs: int = Field(default_factory=lambda: settings.PAIRS)
    max_rounds: int = Field(default_factory=lambda: settings.MAX_ROUNDS)

    # Span dimension; ratio_bound / doubling_bound None means measured
    region: Optional[str] = None
    net_spacing: Optional[float] = None
    ratio_bound: Optional[float] = None
    doubling_bound: Optional[float] = None

    # Differentials
    radius_rule: str = "auto"

    # Blow-ups; view_scales None means the window ladder radii
    point: Optional[int] = None
    view_scales: Optional[List[float]] = None
    view_radii: List[float] = Field(default_factory=lambda: list(settings.VIEW_RADII))
    view_spacing: float = Field(default_factory=lambda: settings.VIEW_SPACING)
    delta: float = 0.0

    threads: int = Field(default_factory=lambda: settings.THREADS)
    seed: int = Field(default_factory=lambda: settings.SEED)

    @field_validator("ratio")
    @classmethod
    def check_ratio(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("ladder ratio must lie in (0, 1)")
        return v

    @field_validator(
        "dependence_tol",
        "residual_tol",
        "rank_tol",
        "atlas_dependence_tol",
        "atlas_residual_tol",
        "mass_fraction",
        "slack",
        "window_lo",
        "window_hi",
        "atlas_window_hi",
        "good_ratio",
        "view_spacing",
    )
    @classmethod
    def check_positive(cls, v: float) -> float:
        if not v > 0.0:
            raise ValueError("tolerances and thresholds must be > 0")
        return v

    @field_validator("eps", "good_eps", "net_spacing", "ratio_bound", "doubling_bound")
    @classmethod
    def check_positive_if_set(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not v > 0.0:
            raise ValueError("must be > 0 when given")
        return v

    @field_validator("view_scales", "view_radii")
    @classmethod
    def check_radii(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and (not v or any(not r > 0.0 for r in v)):
            raise ValueError("radius lists must be nonempty and positive")
        return v

    @field_validator("delta")
    @classmethod
    def check_delta(cls, v: float) -> float:
        if v < 0.0:
            raise ValueError("delta must be >= 0")
        return v

    @field_validator("radius_rule")
    @classmethod
    def check_radius_rule(cls, v: str) -> str:
        if v == "auto":
            return v
        try:
            radius = float(v)
        except ValueError:
            raise ValueError("radius rule is 'auto' or a positive radius") from None
        if not radius > 0.0:
            raise ValueError("radius rule is 'auto' or a positive radius")
        return v

    @field_validator("p", "dilation")
    @classmethod
    def check_at_least_one(cls, v: float) -> float:
        if v < 1.0:
            raise ValueError("p and dilation must be >= 1")
        return v

    @field_validator("threads", "max_tuple", "pairs", "max_rounds")
    @classmethod
    def check_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("counts must be >= 1")
        return v

    @field_validator("centers")
    @classmethod
    def check_centers(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("counts must be >= 1")
        return v

    @model_validator(mode="after")
    def check_window(self) -> "RunConfig":
        if self.window_lo > self.window_hi:
            raise ValueError("window_lo must not exceed window_hi")
        return self

    @property
    def fixed_radius(self) -> Optional[float]:
        return None if self.radius_rule == "auto" else float(self.radius_rule)

    @classmethod
    def resolve(cls, **overrides: Any) -> "RunConfig":
        """Build a config from settings defaults plus explicit (non-None) overrides."""
        return cls(**{k: v for k, v in overrides.items() if v is not None})

    def with_resolved(self, **values: Any) -> "RunConfig":
        """Copy with defaults that depend on the loaded space filled in."""
        return self.model_copy(update={k: v for k, v in values.items() if v is not None})

    def echo(self) -> Dict[str, Any]:
        """Config as embedded in every report."""
        return self.model_dump(mode="json")
