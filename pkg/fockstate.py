# -*- coding: utf-8 -*-
"""
Fock-state algebra for up to two photons
Kets are occupation multisets over (spatial mode, polarization) slots with
the usual 1/sqrt(n!) normalization, so |amplitude|^2 is a Born probability.
"""

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

import config
from errors import StateError

logger = logging.getLogger(__name__)

ModeId = str


class Pol(IntEnum):
    """Polarization of a single photon; H carries logical 0, V logical 1"""
    H = 0
    V = 1


class Slot(NamedTuple):
    """One (spatial mode, polarization) slot; tuples order by mode, then H < V"""
    mode: ModeId
    pol: Pol

    def __str__(self) -> str:
        return f"{self.mode}:{self.pol.name}"


BasisKet = Tuple[Slot, ...]

VACUUM_LABEL = "vac"


def make_ket(slots: Iterable[Slot]) -> BasisKet:
    """Canonical (sorted) ket key for a multiset of occupied slots"""
    ket = tuple(sorted(Slot(ModeId(s[0]), Pol(s[1])) for s in slots))
    if len(ket) > config.MAX_PHOTONS:
        raise StateError(f"{len(ket)} photons exceed the cap of {config.MAX_PHOTONS}")
    for slot in ket:
        if not slot.mode:
            raise StateError("Slot with an empty mode name")
    return ket


def ket_label(ket: BasisKet) -> str:
    """Text form of a ket key, e.g. '1:H,2:V'"""
    if not ket:
        return VACUUM_LABEL
    return ",".join(str(slot) for slot in ket)


def parse_ket(label: str) -> BasisKet:
    """Inverse of ket_label; the result is always in canonical order"""
    label = label.strip()
    if label == VACUUM_LABEL:
        return ()
    slots = []
    for token in label.split(","):
        mode, sep, pol = token.strip().rpartition(":")
        if not sep or pol not in Pol.__members__:
            raise StateError(f"Malformed slot '{token}' in ket '{label}'")
        slots.append(Slot(mode, Pol[pol]))
    return make_ket(slots)


def _ket_weight(ket: BasisKet) -> float:
    """sqrt(prod m!) over slot multiplicities: creation monomial = weight * |ket>"""
    weight = 1.0
    for multiplicity in Counter(ket).values():
        weight *= math.factorial(multiplicity)
    return math.sqrt(weight)


@dataclass(frozen=True)
class JonesVector:
    """Polarization amplitudes (alpha on H, beta on V) of one photon"""
    alpha: complex
    beta: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))

    @classmethod
    def linear(cls, theta_deg: float) -> "JonesVector":
        """Linear polarization at theta degrees from horizontal"""
        theta = math.radians(theta_deg)
        return cls(math.cos(theta), math.sin(theta))

    @property
    def norm_sq(self) -> float:
        return abs(self.alpha) ** 2 + abs(self.beta) ** 2

    def validate(self, tolerance: float = config.NORM_TOLERANCE) -> "JonesVector":
        if abs(self.norm_sq - 1.0) > tolerance:
            raise StateError(f"Jones vector is not normalized (|a|^2+|b|^2 = {self.norm_sq!r})")
        return self


@dataclass(frozen=True)
class PhotonicState:
    """Immutable map from canonical kets to complex amplitudes"""
    amplitudes: Mapping[BasisKet, complex]
    norm_hint: float = field(init=False, default=0.0)

    def __post_init__(self):
        numbers = {len(ket) for ket in self.amplitudes}
        if len(numbers) > 1:
            raise StateError(f"Kets with different photon numbers {sorted(numbers)} in one state")
        object.__setattr__(self, "amplitudes", MappingProxyType(dict(self.amplitudes)))
        object.__setattr__(self, "norm_hint", float(sum(abs(a) ** 2 for a in self.amplitudes.values())))

    @classmethod
    def build(cls, amplitudes: Mapping[BasisKet, complex], prune: Optional[float] = None) -> "PhotonicState":
        """Canonicalize keys, merge duplicates and drop amplitudes below the prune threshold"""
        threshold = config.PRUNE_THRESHOLD if prune is None else prune
        merged: Dict[BasisKet, complex] = {}
        for ket, amp in amplitudes.items():
            key = make_ket(ket)
            merged[key] = merged.get(key, 0j) + complex(amp)
        return cls({ket: amp for ket, amp in merged.items() if abs(amp) >= threshold})

    @property
    def photon_number(self) -> Optional[int]:
        for ket in self.amplitudes:
            return len(ket)
        return None

    @property
    def modes(self) -> FrozenSet[ModeId]:
        return frozenset(slot.mode for ket in self.amplitudes for slot in ket)

    def amplitude(self, ket: Iterable[Slot]) -> complex:
        return self.amplitudes.get(make_ket(ket), 0j)

    def items(self):
        return self.amplitudes.items()

    def __len__(self) -> int:
        return len(self.amplitudes)


def vacuum() -> PhotonicState:
    return PhotonicState({(): 1 + 0j})


def norm_sq(state: PhotonicState) -> float:
    """Squared norm; 0.0 for the empty state"""
    return float(sum(abs(a) ** 2 for a in state.amplitudes.values()))


def normalize(state: PhotonicState) -> PhotonicState:
    norm = math.sqrt(norm_sq(state))
    if norm == 0.0:
        raise StateError("Cannot normalize a state with zero norm")
    return PhotonicState({ket: amp / norm for ket, amp in state.items()})


def single_photon(mode: ModeId, jones: JonesVector) -> PhotonicState:
    """alpha|H_mode> + beta|V_mode>"""
    jones.validate()
    return PhotonicState.build({
        (Slot(mode, Pol.H),): jones.alpha,
        (Slot(mode, Pol.V),): jones.beta,
    })


def tensor(a: PhotonicState, b: PhotonicState) -> PhotonicState:
    """Product of two states prepared in disjoint spatial modes"""
    shared = a.modes & b.modes
    if shared:
        raise StateError(f"States overlap in spatial modes {sorted(shared)}")
    out: Dict[BasisKet, complex] = {}
    for ket_a, amp_a in a.items():
        for ket_b, amp_b in b.items():
            ket = make_ket(ket_a + ket_b)
            bosonic = _ket_weight(ket) / (_ket_weight(ket_a) * _ket_weight(ket_b))
            out[ket] = out.get(ket, 0j) + amp_a * amp_b * bosonic
    return PhotonicState.build(out)


def inner(a: PhotonicState, b: PhotonicState) -> complex:
    """<a|b>"""
    return complex(sum(amp.conjugate() * b.amplitudes.get(ket, 0j) for ket, amp in a.items()))


def fidelity(a: PhotonicState, b: PhotonicState) -> float:
    """|<a|b>|^2 for normalized states of equal photon number"""
    if a.photon_number != b.photon_number:
        raise StateError(f"Photon numbers differ ({a.photon_number} vs {b.photon_number})")
    return min(1.0, abs(inner(a, b)) ** 2)


@dataclass(frozen=True, eq=False)
class SlotMap:
    """Single-photon unitary over an ordered slot list.

    Column j is the image of slots[j]: a+(slots[j]) -> sum_i matrix[i, j] a+(slots[i]).
    Slots not listed are left untouched.
    """
    slots: Tuple[Slot, ...]
    matrix: np.ndarray

    def __post_init__(self):
        slots = tuple(Slot(ModeId(s[0]), Pol(s[1])) for s in self.slots)
        matrix = np.array(self.matrix, dtype=complex)
        if len(set(slots)) != len(slots):
            raise StateError("Slot map lists a slot twice")
        if matrix.shape != (len(slots), len(slots)):
            raise StateError(f"Matrix shape {matrix.shape} does not match {len(slots)} slots")
        deviation = np.max(np.abs(matrix.conj().T @ matrix - np.eye(len(slots)))) if slots else 0.0
        if deviation > config.UNITARY_TOLERANCE:
            raise StateError(f"Slot map is not unitary (deviation {deviation:.3e})")
        matrix.setflags(write=False)
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, slots: Sequence[Slot]) -> "SlotMap":
        return cls(tuple(slots), np.eye(len(slots)))

    def then(self, later: "SlotMap") -> "SlotMap":
        """Map applying self first and `later` second (same slot list)"""
        if later.slots != self.slots:
            raise StateError("Slot maps act on different slot lists")
        return SlotMap(self.slots, later.matrix @ self.matrix)

    def images(self) -> Dict[Slot, List[Tuple[Slot, complex]]]:
        images = {}
        for j, source in enumerate(self.slots):
            column = self.matrix[:, j]
            images[source] = [(self.slots[i], complex(column[i])) for i in np.flatnonzero(column)]
        return images


def apply_slot_map(state: PhotonicState, slot_map: SlotMap, prune: Optional[float] = None) -> PhotonicState:
    """Replace every listed creation operator by its image and re-expand"""
    images = slot_map.images()
    out: Dict[BasisKet, complex] = {}
    for ket, amp in state.items():
        choices = [images.get(slot, [(slot, 1 + 0j)]) for slot in ket]
        scale = amp / _ket_weight(ket)
        for combo in itertools.product(*choices):
            coeff = scale
            for _, c in combo:
                coeff *= c
            new_ket = make_ket(slot for slot, _ in combo)
            out[new_ket] = out.get(new_ket, 0j) + coeff * _ket_weight(new_ket)
    result = PhotonicState.build(out, prune)
    if state.amplitudes and abs(norm_sq(result) - norm_sq(state)) > config.NORM_TOLERANCE * 10:
        logger.warning(f"Norm drift {norm_sq(result) - norm_sq(state):.3e} after slot map")
    return result


def global_phase(a: PhotonicState, b: PhotonicState) -> complex:
    """Unit phase p with b ~ p * a (only meaningful when fidelity is 1)"""
    overlap = inner(a, b)
    if abs(overlap) == 0.0:
        raise StateError("States are orthogonal; no relative phase")
    return overlap / abs(overlap)
