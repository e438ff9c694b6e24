"""Flat key = value configuration files.

Recognized physical keys: k0, k1, L, beta or Lambda, hbar, mass, and
Lx_over_Lomega as an alternative to k0.  Sweep/driver keys (axis, samples,
routes, Mx, My, Ycut, bc, gamma, z1, z2, mu1, mu2, method, workers) are
documented in the README.  Lines starting with '#' and blank lines are
ignored; list values are comma separated.
"""

from __future__ import annotations

from .model import ChannelParams, beta_from_lambda, k0_from_aspect


def _coerce(text: str):
    text = text.strip()
    if "," in text:
        return tuple(_coerce(t) for t in text.split(",") if t.strip())
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def parse_config(path: str) -> dict:
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            cfg[key.strip()] = _coerce(value)
    return cfg


def params_from_config(cfg: dict) -> tuple[ChannelParams, float | None]:
    """Build ChannelParams from a parsed config; returns (params, Lambda).

    Lambda is returned when the config specifies the temperature through the
    quantum parameter (the usual case for sweeps); beta is then derived.
    """
    hbar = float(cfg.get("hbar", 1.0))
    mass = float(cfg.get("mass", 1.0))
    L = float(cfg.get("L", 1.0))
    if "k0" in cfg:
        k0 = float(cfg["k0"])
    elif "Lx_over_Lomega" in cfg:
        k0 = k0_from_aspect(float(cfg["Lx_over_Lomega"]), L, hbar, mass)
    else:
        raise ValueError("config must set k0 or Lx_over_Lomega")
    k1 = float(cfg.get("k1", 0.0))

    lam = cfg.get("Lambda")
    if lam is not None:
        beta = beta_from_lambda(float(lam), k0, hbar, mass)
        lam = float(lam)
    elif "beta" in cfg:
        beta = float(cfg["beta"])
    else:
        raise ValueError("config must set beta or Lambda")
    return ChannelParams(k0=k0, k1=k1, L=L, beta=beta, hbar=hbar, mass=mass), lam
