"""Channel model: parameters, derived scales, and validity checks.

Internal unit convention: hbar = mass = k_B = 1 and L = 1 unless the caller
says otherwise.  Everything downstream (free energies, spectra, currents) is
expressed in these natural units; only :func:`lambda_from_experiment` speaks
the barred units of cold-atom experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ChannelParams:
    """Physical parameters of the periodically corrugated harmonic channel.

    The confining potential is U(x, y) = 1/2 k(x) y^2 with
    k(x) = k0 [1 + k1 cos(2 pi x / L)].
    """

    k0: float
    k1: float = 0.0
    L: float = 1.0
    beta: float = 1.0
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not self.k0 > 0:
            raise ValueError(f"k0 must be positive, got {self.k0}")
        if not (0.0 <= self.k1 < 1.0):
            raise ValueError(
                f"k1 must lie in [0, 1) so the stiffness stays positive, got {self.k1}"
            )
        for name in ("L", "beta", "hbar", "mass"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")

    def stiffness(self, x):
        """Local transverse stiffness k(x), periodic with period L."""
        return self.k0 * (1.0 + self.k1 * np.cos(TWO_PI * np.asarray(x) / self.L))

    def with_beta(self, beta: float) -> "ChannelParams":
        return replace(self, beta=beta)


@dataclass(frozen=True)
class DerivedScales:
    """Length/energy scales derived from ChannelParams (all strictly positive)."""

    lambda_T2: float   # squared thermal de Broglie wavelength, 2 pi hbar^2 beta / m
    L_y: float         # transverse thermal length, sqrt(2 / (beta k0))
    L_omega: float     # oscillator length, 2 sqrt(hbar / (m omega))
    Lambda: float      # quantum expansion parameter, lambda_T2 / (48 pi L_y^2)
    omega: float       # trap frequency, sqrt(k0 / m)


@dataclass(frozen=True)
class ValidityReport:
    """Margins for the two smallness conditions behind the leading-order expansion.

    Margins are the dimensionless ratios left-side/right-side of
    beta k0 lambda_T^2 << 48 pi and beta k0 L^2 >> 4 k1 pi / (1 - k1).
    The report never aborts a run; callers decide what to do with it.
    """

    lambda_small: bool
    lambda_margin: float
    lengthscale_sep: bool
    lengthscale_margin: float
    messages: tuple = field(default_factory=tuple)


def potential_eval(p: ChannelParams, x, y):
    """Channel potential U(x, y) = 1/2 k(x) y^2.

    Periodic in x with period L, even in y.
    """
    return 0.5 * p.stiffness(x) * np.asarray(y) ** 2


def derive_scales(p: ChannelParams) -> DerivedScales:
    lambda_T2 = TWO_PI * p.hbar**2 * p.beta / p.mass
    L_y = math.sqrt(2.0 / (p.beta * p.k0))
    omega = math.sqrt(p.k0 / p.mass)
    L_omega = 2.0 * math.sqrt(p.hbar / (p.mass * omega))
    Lambda = lambda_T2 / (48.0 * math.pi * L_y**2)
    return DerivedScales(lambda_T2=lambda_T2, L_y=L_y, L_omega=L_omega,
                         Lambda=Lambda, omega=omega)


def beta_from_lambda(Lambda: float, k0: float, hbar: float = 1.0,
                     mass: float = 1.0) -> float:
    """Invert Lambda(beta) = beta^2 hbar^2 k0 / (48 m) at fixed stiffness.

    Lambda is proportional to beta^2, so the inversion is closed-form.  This is
    the canonical way temperature sweeps are parameterized.
    """
    if Lambda <= 0:
        raise ValueError("Lambda must be positive to define a temperature")
    return math.sqrt(48.0 * mass * Lambda / k0) / hbar


def params_at_lambda(base: ChannelParams, Lambda: float) -> ChannelParams:
    """Copy of ``base`` with beta chosen so that the quantum parameter equals Lambda."""
    return base.with_beta(beta_from_lambda(Lambda, base.k0, base.hbar, base.mass))


def aspect_ratio(p: ChannelParams) -> float:
    """Longitudinal-to-oscillator-length ratio L / L_omega (grows like k0^(1/4))."""
    return p.L / derive_scales(p).L_omega


def k0_from_aspect(ratio: float, L: float = 1.0, hbar: float = 1.0,
                   mass: float = 1.0) -> float:
    """Stiffness that realizes a given L / L_omega at fixed period L."""
    if ratio <= 0:
        raise ValueError("aspect ratio must be positive")
    return (2.0 * ratio / L) ** 4 * hbar**2 / mass


def experiment_quantumness(T_bar: float, dV_bar: float, lam_bar: float,
                           m_bar: float) -> float:
    """beta k0 lambda_T^2 from barred experimental inputs.

    Inputs: temperature T_bar (units of uK), optical trap depth dV_bar
    (k_B uK), trap light wavelength lam_bar (um), particle mass m_bar (atomic
    units).  Composition: beta k0 lambda_T^2 ~ 3 dV_bar / (T_bar^2 m_bar lam_bar^2).
    """
    for name, v in (("T_bar", T_bar), ("dV_bar", dV_bar),
                    ("lam_bar", lam_bar), ("m_bar", m_bar)):
        if v <= 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return 3.0 * dV_bar / (T_bar**2 * m_bar * lam_bar**2)


def lambda_from_quantumness(beta_k0_lambda_T2: float) -> float:
    """Lambda = beta k0 lambda_T^2 / (96 pi); zero input is the classical limit."""
    if beta_k0_lambda_T2 < 0:
        raise ValueError("beta k0 lambda_T^2 cannot be negative")
    return beta_k0_lambda_T2 / (96.0 * math.pi)


def lambda_from_experiment(T_bar: float, dV_bar: float, lam_bar: float,
                           m_bar: float) -> float:
    """Estimate the quantum parameter Lambda for a cold-atom channel experiment."""
    return lambda_from_quantumness(experiment_quantumness(T_bar, dV_bar, lam_bar, m_bar))


#: Flag thresholds for the validity report: a "<<" inequality is considered
#: satisfied when the ratio is below SMALL, a ">>" one when above 1/SMALL.
#: The underlying theory only gives asymptotic inequalities; the factor-10
#: convention is ours and is documented here on purpose.
VALIDITY_SMALL = 0.1


def check_validity(p: ChannelParams) -> ValidityReport:
    """Evaluate the two regime-of-validity inequalities for the expansion."""
    s = derive_scales(p)
    quant = p.beta * p.k0 * s.lambda_T2
    lambda_margin = quant / (48.0 * math.pi)
    lambda_small = lambda_margin < VALIDITY_SMALL

    left = p.beta * p.k0 * p.L**2
    right = 4.0 * p.k1 * math.pi / (1.0 - p.k1)
    lengthscale_margin = math.inf if right == 0.0 else left / right
    lengthscale_sep = lengthscale_margin > 1.0 / VALIDITY_SMALL

    messages = []
    if not lambda_small:
        messages.append(
            "quantum corrections are not small: beta*k0*lambda_T^2 = "
            f"{quant:.3g} is not << 48*pi (margin {lambda_margin:.3g})"
        )
    if not lengthscale_sep:
        messages.append(
            "longitudinal/transverse scale separation is weak: "
            f"beta*k0*L^2 / (4*k1*pi/(1-k1)) = {lengthscale_margin:.3g} is not >> 1"
        )
    return ValidityReport(
        lambda_small=lambda_small,
        lambda_margin=lambda_margin,
        lengthscale_sep=lengthscale_sep,
        lengthscale_margin=lengthscale_margin,
        messages=tuple(messages),
    )
