"""Shared scalar configuration for the optimization stack."""

from dataclasses import dataclass


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(x_w: float) -> float:
    if x_w <= 0.0:
        raise ValueError("power must be positive")
    import math

    return 10.0 * math.log10(x_w) + 30.0


@dataclass
class SystemConfig:
    """Transmit power budget and receiver noise powers, all in watts."""

    p_bs: float
    noise_user: float
    noise_eve: float

    def __post_init__(self):
        if self.p_bs <= 0.0:
            raise ValueError("p_bs must be positive")
        if self.noise_user <= 0.0 or self.noise_eve <= 0.0:
            # zero noise would make every SINR ill defined
            raise ValueError("noise powers must be positive")

    @classmethod
    def from_dbm(cls, p_bs_dbm: float, noise_user_dbm: float, noise_eve_dbm: float):
        return cls(
            p_bs=dbm_to_watt(p_bs_dbm),
            noise_user=dbm_to_watt(noise_user_dbm),
            noise_eve=dbm_to_watt(noise_eve_dbm),
        )


@dataclass
class AlgoConfig:
    """Iteration caps, stopping tolerances and the slack penalty weight.

    Tolerances are relative-change thresholds on the penalized objective.
    ``penalty`` multiplies the summed unit-modulus slacks and must be
    negative so that slack is discouraged.
    """

    max_inner_active: int = 20
    max_inner_passive: int = 20
    max_outer: int = 20
    tol_inner_active: float = 1e-3
    tol_inner_passive: float = 1e-3
    tol_outer: float = 1e-3
    penalty: float = -100.0
    backend: str = "auto"
    check_taylor: bool = True
    min_phase_influence: float = 1e-3

    def __post_init__(self):
        for name in ("max_inner_active", "max_inner_passive", "max_outer"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("tol_inner_active", "tol_inner_passive", "tol_outer"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.penalty >= 0.0:
            raise ValueError("penalty must be negative")
        if self.backend not in ("auto", "clarabel", "scs"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.min_phase_influence < 0.0:
            raise ValueError("min_phase_influence cannot be negative")
