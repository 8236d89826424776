"""Concrete network oracles backing the measurement-only protocol.

SimulatorOracle wraps a (hidden) network specification and answers occupation
queries with the exact Gaussian dynamics.  Probing and reconstruction code
must only ever touch the NetworkOracle interface, never the wrapped spec.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Iterable

import numpy as np

from . import dynamics, network, spectral
from .dynamics import ProbeInit, SqueezedVacuum, Thermal, Vacuum
from .errors import ValidationError


class SimulatorOracle:
    """Noiseless occupation readout backed by exact closed-system evolution.

    Repeated identical queries return identical values.  measure_count tracks
    the number of readouts for measurement-budget accounting.
    """

    def __init__(self, spec: network.NetworkSpec, temperature: float = 0.0):
        self._adj = network.to_adjacency(spec)
        self._eig = spectral.diagonalize(self._adj)
        self.temperature = float(temperature)
        self.measure_count = 0
        self._sys_cache: dict[tuple, dynamics.TotalSystem] = {}

    def _system(self, nodes: tuple[int, ...], omega_s: float, k: float) -> dynamics.TotalSystem:
        key = (nodes, float(omega_s), float(k))
        sys = self._sys_cache.get(key)
        if sys is None:
            sys = dynamics.assemble_total(self._adj, omega_s, k, nodes)
            if len(self._sys_cache) > 4096:
                self._sys_cache.clear()
            self._sys_cache[key] = sys
        return sys

    def measure(
        self,
        node_set: Iterable[int],
        omega_s: float,
        k: float,
        init: ProbeInit,
        t: float,
    ) -> float:
        self.measure_count += 1
        nodes = tuple(node_set)
        sys = self._system(nodes, omega_s, k)
        state = dynamics.initial_state(init, omega_s, self._eig, self.temperature)
        qq, pp = dynamics.probe_second_moments(sys, state, t)
        return float(0.5 * (omega_s * qq + pp / omega_s) - 0.5)


class NoisyOracle:
    """Adds deterministic Gaussian read noise to an inner oracle.

    The noise is a pure function of the query and the seed, so the oracle
    invariant (identical queries, identical values) still holds.
    """

    def __init__(self, inner, sigma: float, seed: int = 0):
        self._inner = inner
        self.sigma = float(sigma)
        self.seed = int(seed)

    @property
    def measure_count(self) -> int:
        return self._inner.measure_count

    def _noise(self, nodes: tuple[int, ...], omega_s: float, k: float, init: ProbeInit, t: float) -> float:
        tag = repr(init).encode()
        payload = struct.pack(f"<{len(nodes)}q3d", *nodes, omega_s, k, t) + tag
        digest = hashlib.blake2b(payload, digest_size=8, key=struct.pack("<q", self.seed)).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        return float(rng.normal(0.0, self.sigma))

    def measure(
        self,
        node_set: Iterable[int],
        omega_s: float,
        k: float,
        init: ProbeInit,
        t: float,
    ) -> float:
        nodes = tuple(node_set)
        value = self._inner.measure(nodes, omega_s, k, init, t)
        return value + self._noise(nodes, omega_s, k, init, t)


def parse_probe_init(descriptor: str) -> ProbeInit:
    """Parse 'vacuum', 'squeezed:R[,PHI]' or 'thermal:T' into a probe state."""
    text = descriptor.strip().lower()
    if text == "vacuum":
        return Vacuum()
    kind, _, args = text.partition(":")
    if kind == "squeezed":
        parts = [p for p in args.split(",") if p]
        if not 1 <= len(parts) <= 2:
            raise ValidationError(f"bad squeezed descriptor {descriptor!r}")
        r = float(parts[0])
        phi = float(parts[1]) if len(parts) == 2 else 0.0
        return SqueezedVacuum(r=r, phi=phi)
    if kind == "thermal":
        if not args:
            raise ValidationError(f"bad thermal descriptor {descriptor!r}")
        return Thermal(t_p=float(args))
    raise ValidationError(f"unknown probe state descriptor {descriptor!r}")
