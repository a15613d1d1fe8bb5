"""Channel parameters, signal-dependent noise variances and SNR.

Amplitudes live on the PAM-6 alphabet {-5, -3, -1, 1, 3, 5}.  The optical
scale ``eta`` is carried in mW per amplitude unit, so an OMA of ``10 * eta``
mW corresponds to the full alphabet span.  NEP is given in W/sqrt(Hz) and is
divided by ``eta`` expressed in watts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

PAM6 = (-5, -3, -1, 1, 3, 5)
PAM6_SPAN = PAM6[-1] - PAM6[0]

DEFAULT_BETA = 5.25
DEFAULT_NEP = 20e-12
DEFAULT_BANDWIDTH = 100e9
DEFAULT_RIN_DB_HZ = -144.0


class Point2D(NamedTuple):
    x1: int
    x2: int

    def swapped(self) -> "Point2D":
        return Point2D(self.x2, self.x1)


class Observation2D(NamedTuple):
    y1: float
    y2: float


def check_amplitude(x) -> None:
    if x not in PAM6:
        raise ValueError(f"{x!r} is not a PAM-6 amplitude")


@dataclass(frozen=True)
class ChannelParams:
    """Physical link parameters.

    Parameters
    ----------
    nep : float
        Receiver noise-equivalent power in W/sqrt(Hz).
    bandwidth_b : float
        Noise electrical bandwidth in Hz.
    rin_db_hz : float
        Laser RIN in dB/Hz.  ``-inf`` disables RIN.
    beta : float
        Modulation bias in amplitude units; must be at least 5.
    eta : float
        OMA scale in mW per amplitude unit.
    """

    nep: float = DEFAULT_NEP
    bandwidth_b: float = DEFAULT_BANDWIDTH
    rin_db_hz: float = DEFAULT_RIN_DB_HZ
    beta: float = DEFAULT_BETA
    eta: float = 1.0

    def __post_init__(self):
        if not self.beta >= -PAM6[0]:
            raise ValueError(f"beta must be >= {-PAM6[0]}, got {self.beta}")
        if not self.nep >= 0:
            raise ValueError("nep must be non-negative")
        if not self.bandwidth_b > 0:
            raise ValueError("bandwidth_b must be positive")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if math.isnan(self.rin_db_hz) or self.rin_db_hz == math.inf:
            raise ValueError("rin_db_hz must be finite or -inf")

    @property
    def eta_w(self) -> float:
        return self.eta * 1e-3

    @property
    def oma_mw(self) -> float:
        return self.eta * PAM6_SPAN

    @property
    def oma_dbm(self) -> float:
        return 10 * math.log10(self.oma_mw)

    @property
    def rin_enabled(self) -> bool:
        return self.rin_db_hz != -math.inf

    def with_oma(self, oma_dbm: float) -> "ChannelParams":
        return self.replace(eta=oma_to_eta(oma_dbm))

    def replace(self, **changes) -> "ChannelParams":
        fields = dict(nep=self.nep, bandwidth_b=self.bandwidth_b, rin_db_hz=self.rin_db_hz,
                      beta=self.beta, eta=self.eta)
        fields.update(changes)
        return ChannelParams(**fields)

    def noise_model(self) -> "NoiseModel":
        return NoiseModel.from_params(self)


@dataclass(frozen=True)
class NoiseModel:
    """Thermal variance and RIN variance coefficient, in amplitude units."""

    sigma_th_sq: float
    sigma_rin_sq: float

    def __post_init__(self):
        if not (self.sigma_th_sq >= 0 and self.sigma_rin_sq >= 0):
            raise ValueError("noise variances must be non-negative")

    @classmethod
    def from_params(cls, params: ChannelParams) -> "NoiseModel":
        return cls(thermal_variance(params), rin_variance(params))

    def scaled(self, c: float) -> "NoiseModel":
        return NoiseModel(self.sigma_th_sq * c, self.sigma_rin_sq * c)


def thermal_variance(params: ChannelParams) -> float:
    """Return ``(NEP / eta)^2 * B`` with ``eta`` converted to watts."""
    return (params.nep / params.eta_w) ** 2 * params.bandwidth_b


def rin_variance(params: ChannelParams) -> float:
    if not params.rin_enabled:
        return 0.0
    return 10 ** (params.rin_db_hz / 10) * params.bandwidth_b


def variance(x, model: NoiseModel, beta: float):
    """Vectorised noise variance; no alphabet check."""
    return model.sigma_th_sq + (np.asarray(x, dtype=float) + beta) ** 2 * model.sigma_rin_sq


def symbol_variance(x, model: NoiseModel, beta: float) -> float:
    """Noise variance seen by PAM-6 amplitude ``x``."""
    check_amplitude(x)
    return model.sigma_th_sq + (x + beta) ** 2 * model.sigma_rin_sq


def oma_to_eta(oma_dbm: float) -> float:
    if not math.isfinite(oma_dbm):
        raise ValueError("oma_dbm must be finite")
    return 10 ** (oma_dbm / 10) / PAM6_SPAN


def beta_from_extinction_ratio(er_linear: float) -> float:
    """Bias for which the highest and lowest power levels differ by ``er_linear``.

    Solves ``(5 + beta) / (beta - 5) = er``.  An infinite ratio gives ``beta = 5``.
    """
    if not er_linear > 1:
        raise ValueError("extinction ratio must exceed 1")
    if math.isinf(er_linear):
        return float(PAM6[-1])
    return PAM6[-1] * (er_linear + 1) / (er_linear - 1)


def db_to_linear(db: float) -> float:
    return 10 ** (db / 10)


def linear_to_db(x: float) -> float:
    return 10 * math.log10(x)


def channel_sample(x: Point2D, model: NoiseModel, beta: float, rng: np.random.Generator) -> Observation2D:
    """Pass one 2D symbol through the channel using two independent normal draws."""
    z = rng.standard_normal(2)
    s1 = math.sqrt(symbol_variance(x[0], model, beta))
    s2 = math.sqrt(symbol_variance(x[1], model, beta))
    return Observation2D(x[0] + z[0] * s1, x[1] + z[1] * s2)


def channel_samples(points: np.ndarray, model: NoiseModel, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Batch form of :func:`channel_sample` for an ``(n, 2)`` array of symbols."""
    points = np.asarray(points, dtype=float)
    z = rng.standard_normal(points.shape)
    return points + z * np.sqrt(variance(points, model, beta))


@dataclass(frozen=True)
class SNR:
    linear: float

    @property
    def db(self) -> float:
        return linear_to_db(self.linear)


def _points_array(constellation) -> np.ndarray:
    pts = np.asarray(getattr(constellation, "points", constellation), dtype=float)
    if pts.size == 0:
        raise ValueError("empty constellation")
    return pts.reshape(-1, 2)


def snr(constellation, model: NoiseModel, beta: float) -> SNR:
    """Mean symbol energy over mean total noise variance, equiprobable symbols."""
    pts = _points_array(constellation)
    energy = np.mean(np.sum(pts**2, axis=1))
    noise = np.mean(np.sum(variance(pts, model, beta), axis=1))
    return SNR(float(energy / noise))


def asymptotic_snr(constellation, beta: float, sigma_rin_sq: float) -> SNR:
    """SNR in the RIN-dominated limit (thermal noise neglected)."""
    if not sigma_rin_sq > 0:
        raise ValueError("sigma_rin_sq must be positive")
    pts = _points_array(constellation)
    energy = np.mean(np.sum(pts**2, axis=1))
    biased = np.mean(np.sum((pts + beta) ** 2, axis=1))
    return SNR(float(energy / (biased * sigma_rin_sq)))
