"""
Decoder configuration: variant registry, defaults and validation.
"""
from dataclasses import asdict, dataclass, replace
from typing import Dict, Tuple

import numpy as np

VARIANTS = ("plain", "momentum", "adagrad", "ewainit", "mbp", "ambp", "bp_ots", "ewainit_ots", "aewa")
SCHEDULES = ("parallel", "serial")

CLAMP = 30.0
DEFAULT_ITER_MAX = 100
DEFAULT_ADAGRAD_ALPHA = 5.0
DEFAULT_EPSILON = 1e-8
DEFAULT_OTS_T = 9
DEFAULT_OTS_C = 20.0
AMBP_ALPHAS = tuple(float(a) for a in np.linspace(1.0, 0.5, 11))
AEWA_ALPHAS = tuple(float(a) for a in np.linspace(1.0, 0.0, 11))

DEFAULT_ALPHA: Dict[str, float] = {
    "plain": 1.0,
    "momentum": 0.5,
    "adagrad": DEFAULT_ADAGRAD_ALPHA,
    "ewainit": 0.5,
    "mbp": 0.5,
    "ambp": 1.0,
    "bp_ots": 1.0,
    "ewainit_ots": 0.5,
    "aewa": 1.0,
}

# adaptive variant -> decoder run for each alpha of the sweep
ADAPTIVE_INNER = {"ambp": "mbp", "aewa": "ewainit"}


class ConfigError(ValueError):
    """Raised for an invalid decoder configuration or parameter combination."""
    pass


def _check_alpha(variant: str, alpha: float) -> None:
    if variant in ("ewainit", "ewainit_ots"):
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError(f"{variant} needs 0 <= alpha <= 1, got {alpha}")
    elif variant == "momentum":
        if not 0.0 < alpha <= 1.0:
            raise ConfigError(f"momentum needs 0 < alpha <= 1, got {alpha}")
    elif variant in ("adagrad", "mbp"):
        if alpha <= 0.0:
            raise ConfigError(f"{variant} needs alpha > 0, got {alpha}")


@dataclass
class DecoderConfig:
    """Everything that selects and tunes one decoder run."""
    variant: str = "plain"
    schedule: str = "parallel"
    alpha: float = 1.0
    gamma: float = 0.0
    epsilon: float = DEFAULT_EPSILON
    ots_T: int = DEFAULT_OTS_T
    ots_C: float = DEFAULT_OTS_C
    iter_max: int = DEFAULT_ITER_MAX
    alpha_list: Tuple[float, ...] = ()
    early_stop: bool = True
    record_trace: bool = False
    record_messages: bool = False
    clamp: float = CLAMP
    allow_free_momentum: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"Unknown decoder {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"Unknown schedule {self.schedule!r}; choose from {', '.join(SCHEDULES)}")
        if self.iter_max < 1:
            raise ConfigError(f"iter_max must be at least 1, got {self.iter_max}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.epsilon <= 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.ots_T < 1:
            raise ConfigError(f"ots_T must be at least 1, got {self.ots_T}")
        if self.clamp <= 0.0:
            raise ConfigError(f"clamp must be positive, got {self.clamp}")
        self.alpha_list = tuple(float(a) for a in self.alpha_list)
        if any(b >= a for a, b in zip(self.alpha_list, self.alpha_list[1:])):
            raise ConfigError(f"alpha_list must be strictly descending, got {list(self.alpha_list)}")
        if self.variant in ADAPTIVE_INNER:
            if not self.alpha_list:
                raise ConfigError(f"{self.variant} needs a nonempty alpha_list")
            for a in self.alpha_list:
                _check_alpha(ADAPTIVE_INNER[self.variant], a)
        else:
            _check_alpha(self.variant, self.alpha)
        if (self.variant == "momentum" and self.alpha != 1.0 and self.gamma != 0.0
                and not self.allow_free_momentum):
            raise ConfigError("momentum fixes either alpha=1 or gamma=0; pass allow_free_momentum to tune both")

    @classmethod
    def for_variant(cls, variant: str, **overrides) -> "DecoderConfig":
        """Config with the variant's default alpha and sweep list."""
        if variant not in VARIANTS:
            raise ConfigError(f"Unknown decoder {variant!r}; choose from {', '.join(VARIANTS)}")
        params = {"variant": variant, "alpha": DEFAULT_ALPHA[variant]}
        if variant == "ambp":
            params["alpha_list"] = AMBP_ALPHAS
        elif variant == "aewa":
            params["alpha_list"] = AEWA_ALPHAS
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    @property
    def is_adaptive(self) -> bool:
        return self.variant in ADAPTIVE_INNER

    @property
    def uses_ots(self) -> bool:
        return self.variant in ("bp_ots", "ewainit_ots")

    def inner(self, alpha: float) -> "DecoderConfig":
        """Config of one sweep step of an adaptive variant."""
        if not self.is_adaptive:
            raise ConfigError(f"{self.variant} has no inner decoder")
        return replace(self, variant=ADAPTIVE_INNER[self.variant], alpha=float(alpha), alpha_list=())

    def __str__(self) -> str:
        text = f"{self.variant}/{self.schedule} iter_max={self.iter_max}"
        if self.is_adaptive:
            text += f" alphas={self.alpha_list[0]:g}..{self.alpha_list[-1]:g} ({len(self.alpha_list)})"
        elif self.variant != "plain":
            text += f" alpha={self.alpha:g}"
        if self.variant == "momentum":
            text += f" gamma={self.gamma:g}"
        if self.uses_ots:
            text += f" T={self.ots_T} C={self.ots_C:g}"
        return text

    def as_row(self) -> Dict[str, object]:
        """Columns echoed into every results row."""
        return {
            "decoder": self.variant,
            "schedule": self.schedule,
            # adaptive rows list the swept values
            "alpha": ";".join(f"{a:g}" for a in self.alpha_list) if self.is_adaptive else self.alpha,
            "gamma": self.gamma,
            "T": self.ots_T,
            "C": self.ots_C,
            "iter_max": self.iter_max,
        }

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data["alpha_list"] = list(self.alpha_list)
        return data
