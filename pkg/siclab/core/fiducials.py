"""Exact fiducial families, a JSON fiducial catalog and a numerical fiducial search."""

import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from siclab.core.heisenberg import Dimension, displacement_stack
from siclab.core.momentmap import d4_circle_point
from siclab.core.overlap import is_sic_fiducial, normalize
from siclab.core.utils import complex_to_pairs, load_data, pairs_to_complex, save_data

logger = logging.getLogger(__name__)

BUILTIN_NAMES = ('tetrahedron', 'hesse', 'bengtsson')


@dataclass
class FiducialRecord:
    """A fiducial candidate with its provenance and worst SIC residual."""

    d: int
    vector: np.ndarray
    source: str
    residual: float
    name: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'd': self.d,
            'vector': complex_to_pairs(self.vector),
            'source': self.source,
            'residual': float(self.residual),
        }
        if self.name:
            data['name'] = self.name
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FiducialRecord':
        try:
            d = int(data['d'])
            vector = pairs_to_complex(data['vector'])
        except (KeyError, TypeError) as e:
            raise ValueError(f"Malformed fiducial record: {e}")
        if vector.shape[0] != d:
            raise ValueError(f"Record vector has length {vector.shape[0]}, expected d={d}")
        return cls(d=d, vector=vector, source=str(data.get('source', 'unknown')),
                   residual=float(data.get('residual', float('nan'))), name=data.get('name'))


def _record(dim: Dimension, z: np.ndarray, source: str, name: Optional[str] = None) -> FiducialRecord:
    report = is_sic_fiducial(dim, z)
    return FiducialRecord(dim.d, z, source, report.worst_residual, name)


def exact_fiducial_d2() -> FiducialRecord:
    """Qubit fiducial whose orbit is a regular tetrahedron on the Bloch sphere."""
    theta = math.acos(1 / math.sqrt(3))
    z = np.array([math.cos(theta / 2), np.exp(1j * math.pi / 4) * math.sin(theta / 2)])
    return _record(Dimension(2), z, 'exact-catalog', 'tetrahedron')


def exact_fiducial_d3(t: float = 0.0) -> FiducialRecord:
    """The one-parameter family ``(0, 1, -e^{it}) / sqrt(2)``.

    Raises:
        ValueError: If ``t`` is outside ``[0, pi/3]``.
    """
    if not 0.0 <= t <= math.pi / 3 + 1e-15:
        raise ValueError(f"Family parameter must lie in [0, pi/3], got {t}")
    z = np.array([0.0, 1.0, -np.exp(1j * t)]) / math.sqrt(2)
    return _record(Dimension(3), z, f'exact-family(t={t!r})', 'hesse')


def exact_fiducial_d4() -> FiducialRecord:
    """The golden-ratio fiducial in dimension 4.

    With ``rho = 1 + sqrt2`` and ``x = sqrt(2 + sqrt5)`` this is
    ``[2 rho, 1 + rho x - i(rho + x), -2i, 1 - rho x - i(rho - x)]``, the complex
    conjugate of the usual presentation, which is the one whose overlap table reads
    ``sqrt5 Phi(0,1) = u`` under the ``D_p`` convention used here.
    """
    rho = 1 + math.sqrt(2)
    x = math.sqrt(2 + math.sqrt(5))
    z = np.array([2 * rho, 1 + rho * x - 1j * (rho + x), -2j, 1 - rho * x - 1j * (rho - x)])
    return _record(Dimension(4), normalize(z), 'exact-catalog', 'bengtsson')


def builtin_fiducial(name: str, t: float = 0.0) -> FiducialRecord:
    """Look up a built-in exact fiducial by name."""
    if name == 'tetrahedron':
        return exact_fiducial_d2()
    if name == 'hesse':
        return exact_fiducial_d3(t)
    if name == 'bengtsson':
        return exact_fiducial_d4()
    raise ValueError(f"Unknown built-in fiducial '{name}', choose from {BUILTIN_NAMES}")


class SicObjective:
    """Least-squares SIC loss on ``R^{2d}`` with its analytic gradient.

    The loss is ``sum_{p in Z_d^2, p != 0} (|Phi_z(p)|^2 - 1/(d+1))^2`` evaluated at
    ``z = v / ||v||``, so the gradient with respect to ``v`` is tangent to the sphere.
    """

    def __init__(self, dim: Dimension) -> None:
        self.dim = dim
        stack = displacement_stack(dim, modulus=dim.d).reshape(dim.d ** 2, dim.d, dim.d)
        self.ops = stack[1:]
        self.target = 1.0 / (dim.d + 1)

    @staticmethod
    def to_complex(x: np.ndarray) -> np.ndarray:
        half = x.shape[0] // 2
        return x[:half] + 1j * x[half:]

    @staticmethod
    def to_real(z: np.ndarray) -> np.ndarray:
        return np.concatenate([z.real, z.imag])

    def loss(self, z: np.ndarray) -> float:
        phi = np.einsum('i,pij,j->p', z.conj(), self.ops, z)
        return float(np.sum((np.abs(phi) ** 2 - self.target) ** 2))

    def __call__(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        v = self.to_complex(x)
        norm = np.linalg.norm(v)
        z = v / norm
        dz = np.einsum('pij,j->pi', self.ops, z)
        dstar_z = np.einsum('pji,j->pi', self.ops.conj(), z)
        phi = dz @ z.conj()
        r = np.abs(phi) ** 2 - self.target
        loss = float(np.sum(r ** 2))
        # d/dRe + i d/dIm of the loss at z
        grad_z = 4 * ((r * phi.conj()) @ dz + (r * phi) @ dstar_z)
        # Project out the radial direction and rescale for z = v / ||v||
        grad_z = (grad_z - np.real(np.vdot(z, grad_z)) * z) / norm
        return loss, self.to_real(grad_z)


def sic_loss(dim: Dimension, z: Sequence[complex]) -> float:
    """Sum of squared deviations of ``|Phi_z(p)|^2`` from ``1/(d+1)`` over ``p != 0`` in ``Z_d^2``."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape[0] != dim.d:
        raise ValueError(f"Vector has length {z.shape[0]}, expected d={dim.d}")
    return SicObjective(dim).loss(z)


def sic_loss_and_gradient(dim: Dimension, v: Sequence[complex]) -> Tuple[float, np.ndarray]:
    """Loss at ``v / ||v||`` and its gradient in ``R^{2d}`` (real parts then imaginary parts)."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    return SicObjective(dim)(SicObjective.to_real(v))


@dataclass
class SearchConfig:
    d: int
    restarts: int = 64
    max_iters: int = 2000
    seed: int = 0
    tol: float = 1e-9
    workers: int = 1
    stop_on_success: bool = True
    gtol: float = 1e-12

    def __post_init__(self) -> None:
        Dimension(self.d)
        if self.restarts < 1:
            raise ValueError(f"restarts must be at least 1, got {self.restarts}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")


@dataclass
class RestartOutcome:
    index: int
    loss: float
    residual: float
    iterations: int
    vector: np.ndarray


@dataclass
class SearchReport:
    """Result of a search; ``record`` is the best candidate even when the search failed."""

    success: bool
    record: FiducialRecord
    best_loss: float
    restarts_run: int
    successes: int
    losses: List[float] = field(default_factory=list)


def _run_restart(objective: SicObjective, config: SearchConfig, index: int) -> RestartOutcome:
    dim = objective.dim
    rng = np.random.default_rng([config.seed, index])
    start = rng.standard_normal(dim.d) + 1j * rng.standard_normal(dim.d)
    start /= np.linalg.norm(start)
    result = minimize(objective, SicObjective.to_real(start), jac=True, method='L-BFGS-B',
                      options={'maxiter': config.max_iters, 'ftol': 1e-30, 'gtol': config.gtol})
    z = normalize(SicObjective.to_complex(result.x))
    residual = is_sic_fiducial(dim, z).worst_residual
    logger.debug(f"Restart {index}: loss={result.fun:.3e} residual={residual:.3e} iters={result.nit}")
    return RestartOutcome(index, float(result.fun), residual, int(result.nit), z)


def search_fiducial(config: SearchConfig) -> SearchReport:
    """Search for a fiducial by repeated local minimization of the SIC loss.

    Restart ``i`` starts from a complex Gaussian vector drawn from a generator seeded with
    ``(seed, i)``. The chosen outcome is the lowest-index success when ``stop_on_success``
    is set, otherwise the smallest loss with ties broken by restart index, so the result
    does not depend on ``workers``.
    """
    dim = Dimension(config.d)
    objective = SicObjective(dim)
    logger.info(f"Searching for a fiducial in d={config.d} with {config.restarts} restarts "
                f"(seed={config.seed}, workers={config.workers})")

    outcomes: List[RestartOutcome] = []
    if config.workers == 1:
        for i in range(config.restarts):
            outcome = _run_restart(objective, config, i)
            outcomes.append(outcome)
            if config.stop_on_success and outcome.residual <= config.tol:
                break
    else:
        executor = ThreadPoolExecutor(max_workers=config.workers)
        try:
            results = executor.map(lambda i: _run_restart(objective, config, i), range(config.restarts))
            for outcome in results:
                outcomes.append(outcome)
                if config.stop_on_success and outcome.residual <= config.tol:
                    break
        finally:
            executor.shutdown(wait=True, cancel_futures=True)

    successes = [o for o in outcomes if o.residual <= config.tol]
    if config.stop_on_success and successes:
        best = successes[0]
    else:
        best = min(outcomes, key=lambda o: (o.loss, o.index))

    success = best.residual <= config.tol
    record = FiducialRecord(config.d, best.vector,
                            f'numerical(seed={config.seed}, restart={best.index}, loss={best.loss!r})',
                            best.residual)
    if success:
        logger.info(f"Found fiducial in d={config.d} at restart {best.index}, residual {best.residual:.3e}")
    else:
        logger.warning(f"No fiducial in d={config.d} after {len(outcomes)} restarts; "
                       f"best loss {best.loss:.3e}, residual {best.residual:.3e}")
    return SearchReport(success=success, record=record, best_loss=best.loss,
                        restarts_run=len(outcomes), successes=len(successes),
                        losses=[o.loss for o in outcomes])


class FiducialCatalog:
    """JSON list of fiducial records on disk; appends are serialized within the process."""

    _lock = threading.Lock()

    def __init__(self, path: str) -> None:
        self.path = path

    def load(self) -> List[FiducialRecord]:
        if not os.path.exists(self.path):
            logger.debug(f"Catalog {self.path} does not exist yet")
            return []
        data = load_data(self.path)
        if not isinstance(data, list):
            raise ValueError(f"Catalog {self.path} must contain a list of records")
        return [FiducialRecord.from_dict(item) for item in data]

    def append(self, record: FiducialRecord) -> None:
        with self._lock:
            records = self.load()
            records.append(record)
            save_data([r.to_dict() for r in records], self.path)
        logger.info(f"Appended d={record.d} fiducial to catalog {self.path}")

    def lookup(self, name: str, t: float = 0.0) -> FiducialRecord:
        """Find a record by name: built-ins first, then named catalog entries.

        Raises:
            ValueError: If no record carries that name.
        """
        if name in BUILTIN_NAMES:
            return builtin_fiducial(name, t)
        for record in self.load():
            if record.name == name:
                return record
        raise ValueError(f"No fiducial named '{name}' in {self.path}")

    def for_dimension(self, d: int) -> Optional[FiducialRecord]:
        """Best known record for ``d``: a built-in if there is one, else the lowest residual entry."""
        builtin = {2: 'tetrahedron', 3: 'hesse', 4: 'bengtsson'}.get(d)
        if builtin:
            return builtin_fiducial(builtin)
        candidates = [r for r in self.load() if r.d == d]
        if not candidates:
            return None
        return min(candidates, key=lambda r: r.residual)


def d4_bead_fiducials(theta: float, swap: bool = True, starts: int = 200, seed: int = 0,
                         tol: float = 1e-9) -> List[np.ndarray]:
    """Fiducials in d=4 whose standard-basis moment image is a given bead.

    Over the bead ``x`` every candidate is ``(sqrt(x_j) e^{i phi_j})`` with ``phi_0 = 0``; the
    loss is minimized over the three free phases from ``starts`` random phase vectors. The
    distinct solutions found are closed under the clock ``h`` and complex conjugation, both
    of which fix the bead, and returned sorted by phase.
    """
    dim = Dimension(4)
    moduli = np.sqrt(np.clip(d4_circle_point(theta, swap).coordinates, 0.0, None))
    objective = SicObjective(dim)

    def fun(phases):
        full = np.concatenate([[0.0], phases])
        z = moduli * np.exp(1j * full)
        loss, grad = objective(SicObjective.to_real(z))
        g = SicObjective.to_complex(grad)
        # d/dphi_j of z_j = i z_j
        return loss, np.real(np.conj(g) * 1j * z)[1:]

    rng = np.random.default_rng(seed)
    found: List[np.ndarray] = []

    def add(phases):
        phases = np.mod(phases, 2 * np.pi)
        for other in found:
            gap = np.abs(np.angle(np.exp(1j * (phases - other))))
            if np.max(gap) < 1e-6:
                return
        found.append(phases)

    for _ in range(starts):
        result = minimize(fun, rng.uniform(0, 2 * np.pi, 3), jac=True, method='L-BFGS-B',
                          options={'ftol': 1e-30, 'gtol': 1e-13, 'maxiter': 500})
        z = moduli * np.exp(1j * np.concatenate([[0.0], result.x]))
        if is_sic_fiducial(dim, z, tol).passed:
            for k in range(4):
                shifted = result.x + 2 * np.pi * k * np.arange(1, 4) / 4
                add(shifted)
                add(-shifted)

    vectors = [moduli * np.exp(1j * np.concatenate([[0.0], ph])) for ph in sorted(found, key=tuple)]
    logger.info(f"Found {len(vectors)} fiducials over the bead at theta={theta:.6f}")
    return vectors
