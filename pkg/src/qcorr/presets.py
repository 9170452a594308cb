"""Named two-qubit states used by the benchmarks and counterexamples.

Presets are written ``name`` or ``name:p1,p2``; e.g. ``werner:0.3``,
``prop7:0.001,y``, ``prop10:0.01,0.5``.
"""

from __future__ import annotations

import math

import numpy as np

from .measurement import ProjectiveMeasurement, qubit_basis
from .qlinalg import I2, SX, SY, SZ, DensityMatrix, pure_state

PSI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
PAULI_BY_AXIS = {"x": SX, "y": SY, "z": SZ}
PLUS_BY_AXIS = {
    "x": np.array([1, 1], dtype=complex) / math.sqrt(2),
    "y": np.array([1, 1j], dtype=complex) / math.sqrt(2),
    "z": np.array([1, 0], dtype=complex),
}
EPS_RANGE = (0.0, 0.2)


class PresetError(ValueError):
    pass


def _eps(x: float) -> float:
    if not EPS_RANGE[0] < x <= EPS_RANGE[1]:
        raise PresetError(f"eps must lie in (0, 0.2], got {x}")
    return x


def _unit(x: float, what: str) -> float:
    if not 0.0 <= x <= 1.0:
        raise PresetError(f"{what} must lie in [0, 1], got {x}")
    return x


def _axis(a: str) -> str:
    if a not in PAULI_BY_AXIS:
        raise PresetError(f"axis must be x, y or z, got {a!r}")
    return a


def _state(m: np.ndarray) -> DensityMatrix:
    try:
        return DensityMatrix(m, (2, 2))
    except ValueError as exc:
        raise PresetError(f"parameters give an invalid state: {exc}") from exc


def psi_plus() -> DensityMatrix:
    """``(|00> + |11>)/sqrt 2``."""
    return pure_state(PSI_PLUS, (2, 2))


def classical_00_11() -> DensityMatrix:
    return _state(np.diag([0.5, 0, 0, 0.5]).astype(complex))


def werner(c: float) -> DensityMatrix:
    """``c |psi+><psi+| + (1 - c) I/4``."""
    _unit(c, "c")
    return _state(c * psi_plus().matrix + (1 - c) * np.eye(4) / 4)


def prop3(r: float = 0.5) -> DensityMatrix:
    """Product of two equal diagonal qubit states ``(I + r Z)/2``."""
    _unit(r, "r")
    q = 0.5 * (I2 + r * SZ)
    return _state(np.kron(q, q))


def tilted_measurement(alpha: float, side="AB") -> ProjectiveMeasurement:
    """Both measured qubits in the basis tilted by ``alpha`` from z in the x-z plane."""
    from .measurement import parse_side

    sides = parse_side(side)
    return ProjectiveMeasurement(sides, tuple(qubit_basis(alpha, 0.0) for _ in sides))


def prop6_rotation(theta: float) -> np.ndarray:
    """Local ``|0> -> cos|0> + sin|1>``, ``|1> -> sin|0> - cos|1>`` on both qubits."""
    c, s = math.cos(theta), math.sin(theta)
    u = np.array([[c, s], [s, -c]], dtype=complex)
    return np.kron(u, u)


def prop6(theta: float) -> DensityMatrix:
    return classical_00_11().evolve(prop6_rotation(theta))


def prop7(eps: float | None = None, axis: str | None = None) -> DensityMatrix:
    """``(I + XZ/2 + XX/2)/4``, optionally conjugated by ``cos e I - i sin e X (x) sigma_axis``."""
    rho = 0.25 * (np.kron(I2, I2) + 0.5 * np.kron(SX, SZ) + 0.5 * np.kron(SX, SX))
    if axis is None:
        return _state(rho)
    eps = _eps(eps)
    u = math.cos(eps) * np.eye(4) - 1j * math.sin(eps) * np.kron(SX, PAULI_BY_AXIS[_axis(axis)])
    return _state(u @ rho @ u.conj().T)


def prop8(eps: float, axis: str) -> DensityMatrix:
    """``(1 - e) |psi+><psi+| + e |phi phi><phi phi|`` with ``phi`` the + state along ``axis``."""
    eps = _eps(eps)
    phi = PLUS_BY_AXIS[_axis(axis)]
    pp = pure_state(np.kron(phi, phi), (2, 2)).matrix
    return _state((1 - eps) * psi_plus().matrix + eps * pp)


def prop10(eps: float, c: float) -> DensityMatrix:
    """``(II + e(IZ + ZI) + c XX)/4``."""
    eps, c = _eps(eps), _unit(c, "c")
    return _state(0.25 * (np.kron(I2, I2) + eps * (np.kron(I2, SZ) + np.kron(SZ, I2)) + c * np.kron(SX, SX)))


def prop10_lo(eps: float, c: float) -> DensityMatrix:
    """``(II + e(IX + XI) + c XX)/4``."""
    eps, c = _eps(eps), _unit(c, "c")
    return _state(0.25 * (np.kron(I2, I2) + eps * (np.kron(I2, SX) + np.kron(SX, I2)) + c * np.kron(SX, SX)))


def prop10_local_channel(eps: float):
    """Per qubit: dephase in x, then with probability ``eps`` reset to ``|+>``."""
    from .measurement import LocalChannel

    eps = _eps(eps)
    plus, minus = PLUS_BY_AXIS["x"], np.array([1, -1], dtype=complex) / math.sqrt(2)
    p_plus, p_minus = np.outer(plus, plus.conj()), np.outer(minus, minus.conj())
    kraus = (
        math.sqrt(1 - eps) * p_plus,
        math.sqrt(1 - eps) * p_minus,
        math.sqrt(eps) * np.outer(plus, plus.conj()),
        math.sqrt(eps) * np.outer(plus, minus.conj()),
    )
    return LocalChannel((kraus, kraus))


def demon_ex1(eps: float = 0.0) -> DensityMatrix:
    """``((1 + e)|00><00| + (1 - e)|11><11|)/2``."""
    if not 0.0 <= eps <= EPS_RANGE[1]:
        raise PresetError(f"eps must lie in [0, 0.2], got {eps}")
    return _state(np.diag([0.5 * (1 + eps), 0, 0, 0.5 * (1 - eps)]).astype(complex))


def demon_ex3(c: float) -> DensityMatrix:
    """``(1 - c)|psi+><psi+| + c |0+><0+|``."""
    _unit(c, "c")
    zp = np.kron(PLUS_BY_AXIS["z"], PLUS_BY_AXIS["x"])
    return _state((1 - c) * psi_plus().matrix + c * np.outer(zp, zp.conj()))


def _num(x: str) -> float:
    try:
        return float(x)
    except ValueError as exc:
        raise PresetError(f"not a number: {x!r}") from exc


def _p7(args):
    if not args:
        return prop7()
    if len(args) == 1:
        return prop7(_num(args[0]), "x")
    return prop7(_num(args[0]), args[1])


PRESETS = {
    "bell": (0, lambda a: psi_plus()),
    "psi_plus": (0, lambda a: psi_plus()),
    "classical_00_11": (0, lambda a: classical_00_11()),
    "werner": (1, lambda a: werner(_num(a[0]))),
    "prop3": ((0, 1), lambda a: prop3(*map(_num, a))),
    "prop6": (1, lambda a: prop6(_num(a[0]))),
    "prop7": ((0, 1, 2), _p7),
    "prop8": (2, lambda a: prop8(_num(a[0]), a[1])),
    "prop10": (2, lambda a: prop10(_num(a[0]), _num(a[1]))),
    "prop10_lo": (2, lambda a: prop10_lo(_num(a[0]), _num(a[1]))),
    "demon_ex1": ((0, 1), lambda a: demon_ex1(*map(_num, a))),
    "demon_ex3": (1, lambda a: demon_ex3(_num(a[0]))),
}


def is_preset(text: str) -> bool:
    return text.split(":", 1)[0] in PRESETS


def preset(text: str) -> DensityMatrix:
    """Parse ``name[:p1,p2,...]`` into a state."""
    name, _, rest = text.partition(":")
    if name not in PRESETS:
        raise PresetError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    arity, build = PRESETS[name]
    args = [a.strip() for a in rest.split(",")] if rest else []
    allowed = arity if isinstance(arity, tuple) else (arity,)
    if len(args) not in allowed:
        raise PresetError(f"preset {name} takes {' or '.join(map(str, allowed))} parameter(s), got {len(args)}")
    return build(args)
