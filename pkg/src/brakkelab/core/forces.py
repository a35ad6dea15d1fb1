from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence

import numpy as np
from pydantic import TypeAdapter

from .curvature import CurvatureField, compute_curvature, normal_projection, scale_curvature
from .errors import NonPositiveScale, SupNormViolation
from .mesh import TriMesh, integrate_scalar
from .schemas import (
    ConstantForce,
    ForceSpec,
    RescaledMCFForce,
    ScaledCompositeForce,
    VolumePreservingForce,
    ZeroForce,
)

SUP_NORM_RTOL = 1e-9

_force_adapter = TypeAdapter(ForceSpec)


def parse_force(data: Dict[str, Any]) -> ForceSpec:
    """Validates a tagged force mapping such as ``{"kind": "constant", "vector": [0, 0, -1]}``."""
    return _force_adapter.validate_python(data)


class BrakkeOperator(ABC):
    """A force field β(x, T_xM) evaluated per vertex; T_xM enters through the vertex normal."""
    kind: str

    def __init__(self, spec: ForceSpec):
        self.spec = spec

    @property
    def bound(self) -> float:
        return float(self.spec.bound)

    @abstractmethod
    def _evaluate(self, mesh: TriMesh, curvature: CurvatureField) -> np.ndarray:
        pass

    def evaluate(self, mesh: TriMesh, curvature: CurvatureField) -> np.ndarray:
        values = self._evaluate(mesh, curvature)
        peak = float(np.linalg.norm(values, axis=1).max()) if len(values) else 0.0
        if peak > self.bound * (1.0 + SUP_NORM_RTOL):
            raise SupNormViolation(
                f"|beta| exceeds the declared bound for force '{self.kind}'.",
                {"max_norm": peak, "declared_bound": self.bound},
            )
        return values


class ZeroOperator(BrakkeOperator):
    kind = "zero"

    def _evaluate(self, mesh, curvature):
        return np.zeros((mesh.n_vertices, 3))


class ConstantOperator(BrakkeOperator):
    kind = "constant"

    def _evaluate(self, mesh, curvature):
        return np.tile(np.asarray(self.spec.vector, dtype=np.float64), (mesh.n_vertices, 1))


class VolumePreservingOperator(BrakkeOperator):
    """Average scalar mean curvature along the outward normal; cancels the mean normal speed."""
    kind = "volume_preserving"

    def _evaluate(self, mesh, curvature):
        mean_h = integrate_scalar(mesh, curvature.mean_curvature) / mesh.total_area
        return mean_h * curvature.normals


class RescaledMCFOperator(BrakkeOperator):
    kind = "rescaled_mcf"

    def _evaluate(self, mesh, curvature):
        reach = float(np.linalg.norm(mesh.vertices, axis=1).max())
        if reach > self.spec.domain_radius:
            raise SupNormViolation(
                "Surface left the ball on which the rescaled-flow force is declared bounded.",
                {"max_radius": reach, "domain_radius": self.spec.domain_radius},
            )
        return 0.5 * normal_projection(mesh.vertices, curvature.normals)


class ScaledCompositeOperator(BrakkeOperator):
    """scale · inner(shift + scale · x): the inner force seen from rescaled coordinates."""
    kind = "scaled_composite"

    def _evaluate(self, mesh, curvature):
        scale = self.spec.scale
        shifted = mesh.with_vertices(np.asarray(self.spec.shift) + scale * mesh.vertices, check=False)
        inner = get_operator(self.spec.inner)
        return scale * inner.evaluate(shifted, scale_curvature(curvature, scale))


_operator_classes = {
    ZeroOperator.kind: ZeroOperator,
    ConstantOperator.kind: ConstantOperator,
    VolumePreservingOperator.kind: VolumePreservingOperator,
    RescaledMCFOperator.kind: RescaledMCFOperator,
    ScaledCompositeOperator.kind: ScaledCompositeOperator,
}


def get_operator(spec: ForceSpec) -> BrakkeOperator:
    operator_class = _operator_classes.get(spec.kind)
    if operator_class is None:
        raise ValueError(f"Unknown force kind: {spec.kind}")
    return operator_class(spec)


def eval_force(spec: ForceSpec, mesh: TriMesh, curvature: Optional[CurvatureField] = None) -> np.ndarray:
    """
    Per-vertex values of β on a mesh snapshot.

    Raises:
        SupNormViolation: a value exceeds the declared bound by more than 1e-9 relative.
    """
    if curvature is None:
        curvature = compute_curvature(mesh)
    return get_operator(spec).evaluate(mesh, curvature)


def rescale_force(spec: ForceSpec, center: Sequence[float], alpha: float) -> ForceSpec:
    """
    The force of the parabolically rescaled flow, β^α(x) = α·β(y + αx).

    Constant and zero fields stay in closed form; everything else is wrapped
    (or re-wrapped) in a ScaledCompositeForce. The declared bound becomes αB.
    """
    if not alpha > 0:
        raise NonPositiveScale("Rescaling factor must be positive.", {"alpha": alpha})
    y = np.asarray(center, dtype=np.float64)
    if isinstance(spec, ZeroForce):
        return ZeroForce()
    if isinstance(spec, ConstantForce):
        return ConstantForce(vector=[alpha * c for c in spec.vector])
    if isinstance(spec, ScaledCompositeForce):
        shift = np.asarray(spec.shift) + spec.scale * y
        return ScaledCompositeForce(scale=spec.scale * alpha, shift=shift.tolist(), inner=spec.inner)
    if isinstance(spec, (VolumePreservingForce, RescaledMCFForce)):
        return ScaledCompositeForce(scale=alpha, shift=y.tolist(), inner=spec)
    raise ValueError(f"Unknown force kind: {spec.kind}")
