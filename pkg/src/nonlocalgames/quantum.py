"""Exact statevector simulation of local X/Y/Z measurements on a few qubits.

Conventions used throughout the package:

* qubit 1 is the leftmost tensor factor, i.e. the most significant bit of
  the computational-basis index,
* every single-qubit measurement has the two outcomes +1 and -1,
* for Z the +1 outcome is |0>; X and Y use the standard Pauli eigenbases.

States are dense complex vectors. All probabilities arising from the
bundled games are dyadic rationals, so the 1e-9 "happens surely / never"
decision threshold is far away from every value that actually occurs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, annotation only
    from .games import ParityConstraint

#: probability threshold below which an event is treated as impossible
PROB_TOL = 1e-9
#: tolerance for norm / completeness checks
NORM_TOL = 1e-12

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class ObservableKind(Enum):
    """One of the three single-qubit measurements X, Y, Z."""

    X = "x"
    Y = "y"
    Z = "z"

    def __lt__(self, other: "ObservableKind") -> bool:
        if isinstance(other, ObservableKind):
            return self.value < other.value
        return NotImplemented

    @property
    def matrix(self) -> np.ndarray:
        return _MATRICES[self]

    @property
    def basis_change(self) -> np.ndarray:
        """Unitary whose rows are the +1 and -1 eigenvectors (conjugated).

        Applying it maps the +1 eigenvector to |0> and the -1 eigenvector
        to |1>, turning any measurement of this kind into a computational
        basis readout.
        """
        return _BASIS_CHANGES[self]


_MATRICES = {
    ObservableKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    ObservableKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    ObservableKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}
_BASIS_CHANGES = {
    ObservableKind.X: np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2,
    ObservableKind.Y: np.array([[1, -1j], [1, 1j]], dtype=complex) * _INV_SQRT2,
    ObservableKind.Z: np.eye(2, dtype=complex),
}


@dataclass(frozen=True, order=True)
class SiteObservable:
    """A measurement kind applied to one qubit, e.g. X on qubit 3.

    Ordering is (qubit, kind) so that sorted collections read in qubit
    order, the way parity constraints are usually written.
    """

    qubit: int
    kind: ObservableKind

    def __post_init__(self) -> None:
        if self.qubit < 1:
            raise ValueError(f"qubit index must be >= 1, got {self.qubit}")

    def __str__(self) -> str:
        return f"{self.kind.value}{self.qubit}"

    __repr__ = __str__

    @classmethod
    def from_text(cls, text: str) -> "SiteObservable":
        """Parse compact notation like ``x1`` or ``z4``."""
        text = text.strip().lower()
        if len(text) < 2 or text[0] not in "xyz" or not text[1:].isdigit():
            raise ValueError(f"cannot parse site observable {text!r}")
        return cls(int(text[1:]), ObservableKind(text[0]))


def site(text: str) -> SiteObservable:
    return SiteObservable.from_text(text)


def sites(text: str) -> tuple[SiteObservable, ...]:
    """Parse a whitespace-separated list such as ``"x1 x3 z4"``."""
    return tuple(SiteObservable.from_text(tok) for tok in text.split())


#: one sampled outcome: the measured observables paired with their values
OutcomeTuple = tuple[tuple[SiteObservable, int], ...]


def outcomes_as_mapping(outcomes: OutcomeTuple) -> dict[SiteObservable, int]:
    return {obs: val for obs, val in outcomes}


@dataclass(frozen=True)
class Statevector:
    """Normalized pure state on ``num_qubits`` qubits.

    ``amplitudes[i]`` is the coefficient of the basis state whose bits,
    read most significant first, give the qubit values in order 1..n.
    """

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state is not normalized (norm {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def amplitude(self, bits: str) -> complex:
        """Coefficient of a basis state given as a bit string like ``"0101"``."""
        if len(bits) != self.num_qubits or set(bits) - {"0", "1"}:
            raise ValueError(f"bad basis label {bits!r}")
        return complex(self.amplitudes[int(bits, 2)])


def basis_state(num_qubits: int, index: int = 0) -> Statevector:
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[index] = 1.0
    return Statevector(num_qubits, amps)


def make_psi() -> Statevector:
    """The four-qubit state behind every game in the catalog.

    Equal +1/2 amplitudes on |0000>, |0101>, |1010> and -1/2 on |1111>.
    It is the state obtained from two Bell pairs on qubit pairs (1,3) and
    (2,4) by applying CZ between qubits 1 and 2.
    """
    amps = np.zeros(16, dtype=complex)
    amps[0b0000] = 0.5
    amps[0b0101] = 0.5
    amps[0b1010] = 0.5
    amps[0b1111] = -0.5
    return Statevector(4, amps)


def make_ghz(num_qubits: int) -> Statevector:
    """(|0...0> + |1...1>)/sqrt(2) on ``num_qubits`` >= 2 qubits."""
    if num_qubits < 2:
        raise ValueError(f"GHZ state needs at least 2 qubits, got {num_qubits}")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = amps[-1] = _INV_SQRT2
    return Statevector(num_qubits, amps)


def _check_observables(
    state: Statevector, observables: Sequence[SiteObservable]
) -> None:
    if not observables:
        raise ValueError("need at least one observable")
    qubits = [o.qubit for o in observables]
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit in observables: {observables}")
    out_of_range = [q for q in qubits if q > state.num_qubits]
    if out_of_range:
        raise ValueError(
            f"qubit(s) {out_of_range} exceed state size {state.num_qubits}"
        )


def _apply_single_qubit(amps: np.ndarray, u: np.ndarray, axis: int, n: int) -> np.ndarray:
    t = amps.reshape([2] * n)
    t = np.moveaxis(np.tensordot(u, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def joint_distribution(
    state: Statevector, observables: Sequence[SiteObservable]
) -> dict[tuple[int, ...], float]:
    """Joint outcome distribution of commuting single-qubit measurements.

    Returns a mapping from every tuple of +-1 values (ordered like
    ``observables``, +1 enumerated before -1) to its probability.
    Unmeasured qubits are marginalized. Probabilities sum to 1 within
    1e-12.
    """
    _check_observables(state, observables)
    n = state.num_qubits
    amps = np.asarray(state.amplitudes)
    for obs in observables:
        if obs.kind is not ObservableKind.Z:
            amps = _apply_single_qubit(amps, obs.kind.basis_change, obs.qubit - 1, n)
    probs = np.abs(amps.reshape([2] * n)) ** 2
    measured_axes = [o.qubit - 1 for o in observables]
    unmeasured = tuple(ax for ax in range(n) if ax not in measured_axes)
    if unmeasured:
        probs = probs.sum(axis=unmeasured)
    # remaining axes are in qubit order; put them in observables order
    rank = np.argsort(np.argsort(measured_axes))
    probs = np.transpose(probs, rank)
    probs = np.clip(probs, 0.0, None)
    total = float(probs.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise AssertionError(f"probabilities sum to {total!r}, not 1")
    k = len(observables)
    dist: dict[tuple[int, ...], float] = {}
    for values in itertools.product((+1, -1), repeat=k):
        idx = tuple(0 if v == +1 else 1 for v in values)
        dist[values] = float(probs[idx])
    return dist


def expectation(state: Statevector, observables: Sequence[SiteObservable]) -> float:
    """Expected value of the product of the listed measurement outcomes."""
    dist = joint_distribution(state, observables)
    total = 0.0
    for values, p in dist.items():
        prod = 1
        for v in values:
            prod *= v
        total += prod * p
    return total


def sample(
    state: Statevector, observables: Sequence[SiteObservable], seed: int
) -> OutcomeTuple:
    """Draw one outcome tuple; equal seeds give equal results."""
    dist = joint_distribution(state, observables)
    rng = np.random.default_rng(seed)
    values = draw_from(dist, float(rng.random()))
    return tuple(zip(tuple(observables), values))


def draw_from(
    dist: Mapping[tuple[int, ...], float], u: float
) -> tuple[int, ...]:
    """Pick the outcome whose cumulative probability interval contains u.

    Iterates ``dist`` in its insertion order, which for distributions
    produced here is the canonical +1-before--1 product order.
    """
    acc = 0.0
    last = None
    for values, p in dist.items():
        acc += p
        last = values
        if u < acc:
            return values
    assert last is not None
    return last  # u landed in the roundoff sliver at the top


def reduced_spectrum(state: Statevector, keep: Iterable[int]) -> list[float]:
    """Eigenvalues of the reduced density operator on the kept qubits.

    ``keep`` must be a non-empty proper subset of the qubits. The result
    is sorted in descending order; it is invariant under local unitaries,
    which makes it a cheap witness for local-unitary inequivalence.
    """
    keep_set = sorted(set(keep))
    n = state.num_qubits
    if not keep_set:
        raise ValueError("keep must not be empty")
    if any(q < 1 or q > n for q in keep_set):
        raise ValueError(f"kept qubits {keep_set} out of range 1..{n}")
    if len(keep_set) == n:
        raise ValueError("keep must be a proper subset of the qubits")
    axes = [q - 1 for q in keep_set]
    rest = [ax for ax in range(n) if ax not in axes]
    mat = np.transpose(state.amplitudes.reshape([2] * n), axes + rest)
    mat = mat.reshape(2 ** len(axes), -1)
    rho = mat @ mat.conj().T
    eigvals = np.linalg.eigvalsh(rho).real
    eigvals = np.clip(eigvals, 0.0, None)
    if abs(float(eigvals.sum()) - 1.0) > 1e-9:
        raise AssertionError("reduced spectrum does not sum to 1")
    return sorted((float(v) for v in eigvals), reverse=True)


@dataclass(frozen=True)
class ConstraintReport:
    """Whether one parity constraint holds surely on a state."""

    constraint: "ParityConstraint"
    holds_surely: bool
    violation_mass: float


def verify_constraints(
    state: Statevector, constraints: Iterable["ParityConstraint"]
) -> list[ConstraintReport]:
    """Check which parity constraints the state satisfies with certainty.

    For each constraint the listed observables are measured jointly and
    the probability mass on outcomes violating the required parity is
    reported; ``holds_surely`` means that mass is below 1e-9.
    """
    reports = []
    for constraint in constraints:
        observables = sorted(constraint.vars)
        _check_observables(state, observables)
        dist = joint_distribution(state, observables)
        mass = 0.0
        for values, p in dist.items():
            prod = 1
            for v in values:
                prod *= v
            if prod != constraint.sign:
                mass += p
        reports.append(
            ConstraintReport(constraint, holds_surely=mass < PROB_TOL, violation_mass=mass)
        )
    return reports
