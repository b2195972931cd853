"""Class-C scatterers: catalogue shapes, planar contacts, validation and boundary labelling.

The shape catalogue is closed: balls, spherical caps and half-balls (a cap cut
through the centre).  Every shape exposes

* ``contains`` / ``signed_distance`` (the latter is exact inside and a lower
  bound outside, which is all cell classification needs),
* ``patches()``: smooth maps from ``[-1, 1]^2`` onto its boundary,
* ``flat_face``: the base disc of a cap, or ``None``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if n == 0:
        raise ConfigurationError("zero vector where a direction was expected")
    return v / n


def orthonormal_frame(normal) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (t1, t2, n) with t1 x t2 = n."""
    n = _unit(normal)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(helper, n)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2, n


# ---------------------------------------------------------------------------
# Surface patches
# ---------------------------------------------------------------------------

_DISC_INNER = 0.5


def _unit_disc_map(part: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Five-part map of [-1,1]^2 onto the unit disc (central square plus four rims)."""
    s = _DISC_INNER
    if part == 4:
        return np.stack([s * a, s * b], axis=-1)
    bb = 0.5 * (b + 1.0)
    ang = a * np.pi / 4.0
    px = (1.0 - bb) * s + bb * np.cos(ang)
    py = (1.0 - bb) * s * a + bb * np.sin(ang)
    c, sn = np.cos(part * np.pi / 2.0), np.sin(part * np.pi / 2.0)
    return np.stack([c * px - sn * py, sn * px + c * py], axis=-1)


class Patch:
    """A smooth parameterized surface piece over ``[-1, 1]^2``."""

    label = "curved"
    fd_step = 1e-6

    def _raw(self, a, b):  # pragma: no cover - abstract
        raise NotImplementedError

    def _outward_hint(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    def __init__(self):
        x, xa, xb = self.eval(np.array([0.0]), np.array([0.0]), oriented=False)
        nn = np.cross(xa, xb)
        self.flip = float(np.sign(np.sum(nn * self._outward_hint(x))))
        if self.flip == 0:
            raise ConfigurationError("degenerate patch orientation")

    def __call__(self, a, b):
        return self._raw(np.asarray(a, float), np.asarray(b, float))

    def eval(self, a, b, oriented=True):
        """Points, d/da and d/db at parameter arrays (central differences)."""
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        e = self.fd_step
        x = self._raw(a, b)
        xa = (self._raw(a + e, b) - self._raw(a - e, b)) / (2 * e)
        xb = (self._raw(a, b + e) - self._raw(a, b - e)) / (2 * e)
        if oriented and self.flip < 0:
            xa = -xa
        return x, xa, xb


class SpherePatch(Patch):
    """Equiangular cubed-sphere face."""

    def __init__(self, center, radius, frame, face: int):
        self.center = np.asarray(center, float)
        self.radius = float(radius)
        axis, sign = divmod(face, 2)
        sgn = 1.0 if sign == 0 else -1.0
        self.fn = sgn * frame[:, axis]
        self.t1 = frame[:, (axis + 1) % 3]
        self.t2 = sgn * frame[:, (axis + 2) % 3]
        super().__init__()

    def _raw(self, a, b):
        p = self.fn + np.tan(np.pi * a / 4)[..., None] * self.t1 + np.tan(np.pi * b / 4)[..., None] * self.t2
        return self.center + self.radius * p / np.linalg.norm(p, axis=-1, keepdims=True)

    def _outward_hint(self, x):
        return x - self.center


class DiscPatch(Patch):
    label = "flat"

    def __init__(self, center, radius, normal, part: int):
        self.center = np.asarray(center, float)
        self.radius = float(radius)
        self.t1, self.t2, self.normal = orthonormal_frame(normal)
        self.part = part
        super().__init__()

    def _raw(self, a, b):
        p = _unit_disc_map(self.part, a, b)
        return self.center + self.radius * (p[..., :1] * self.t1 + p[..., 1:] * self.t2)

    def _outward_hint(self, x):
        return np.broadcast_to(self.normal, x.shape)


class CapPatch(Patch):
    """Polar cap of a sphere around ``pole`` with half-angle ``alpha``."""

    def __init__(self, center, radius, pole, alpha, part: int):
        self.center = np.asarray(center, float)
        self.radius = float(radius)
        self.t1, self.t2, self.pole = orthonormal_frame(pole)
        self.alpha = float(alpha)
        self.part = part
        super().__init__()

    def _raw(self, a, b):
        p = _unit_disc_map(self.part, a, b)
        rho = np.linalg.norm(p, axis=-1, keepdims=True)
        th = self.alpha * rho
        sinc = self.alpha * np.sinc(th / np.pi)  # sin(alpha rho) / rho
        tang = sinc * (p[..., :1] * self.t1 + p[..., 1:] * self.t2)
        return self.center + self.radius * (tang + np.cos(th) * self.pole)

    def _outward_hint(self, x):
        return x - self.center


# ---------------------------------------------------------------------------
# Shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatFace:
    center: np.ndarray
    radius: float
    normal: np.ndarray  # outward from the owning shape


class Ball:
    kind = "ball"

    def __init__(self, center, radius):
        self.center = np.asarray(center, float).reshape(3)
        self.radius = float(radius)
        if self.radius <= 0:
            raise ConfigurationError("ball radius must be positive")

    def to_dict(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}

    def signed_distance(self, pts):
        return np.linalg.norm(np.atleast_2d(pts) - self.center, axis=1) - self.radius

    def contains(self, pts, tol=0.0):
        return self.signed_distance(pts) < -tol

    @property
    def volume(self):
        return 4.0 / 3.0 * np.pi * self.radius**3

    @property
    def surface_area(self):
        return 4.0 * np.pi * self.radius**2

    @property
    def flat_face(self):
        return None

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def bounding_sphere(self):
        return self.center, self.radius

    def patches(self):
        return [SpherePatch(self.center, self.radius, np.eye(3), f) for f in range(6)]

    def face_areas(self):
        return {"curved": self.surface_area}


class SphericalCap:
    """Part of the ball |x - c| < R above the plane (x - c).axis = offset."""

    kind = "cap"

    def __init__(self, center, radius, axis, offset):
        self.center = np.asarray(center, float).reshape(3)
        self.radius = float(radius)
        self.axis = _unit(axis)
        self.offset = float(offset)
        if self.radius <= 0:
            raise ConfigurationError("cap radius must be positive")
        if not -self.radius < self.offset < self.radius:
            raise ConfigurationError("cap offset must lie strictly inside (-radius, radius)")

    def to_dict(self):
        return {"type": "cap", "center": self.center.tolist(), "radius": self.radius,
                "axis": self.axis.tolist(), "offset": self.offset}

    @property
    def height(self):
        return self.radius - self.offset

    @property
    def alpha(self):
        return float(np.arccos(self.offset / self.radius))

    def signed_distance(self, pts):
        d = np.atleast_2d(pts) - self.center
        return np.maximum(np.linalg.norm(d, axis=1) - self.radius, self.offset - d @ self.axis)

    def contains(self, pts, tol=0.0):
        return self.signed_distance(pts) < -tol

    @property
    def volume(self):
        h = self.height
        return np.pi * h * h * (3 * self.radius - h) / 3.0

    @property
    def flat_face(self):
        return FlatFace(self.center + self.offset * self.axis,
                        float(np.sqrt(self.radius**2 - self.offset**2)), -self.axis)

    @property
    def surface_area(self):
        return 2 * np.pi * self.radius * self.height + np.pi * self.flat_face.radius**2

    def face_areas(self):
        return {"curved": 2 * np.pi * self.radius * self.height, "flat": np.pi * self.flat_face.radius**2}

    def bounding_sphere(self):
        ff = self.flat_face
        top = self.center + self.radius * self.axis
        if self.offset >= 0:
            c = ff.center if self.height <= ff.radius else None
            if c is not None and np.linalg.norm(top - c) <= ff.radius:
                return c, ff.radius
            # sphere through the rim and the top
            t = (self.height**2 - ff.radius**2) / (2 * self.height)
            c = ff.center + max(t, 0.0) * self.axis
            return c, float(max(np.linalg.norm(top - c), np.hypot(ff.radius, np.linalg.norm(c - ff.center))))
        return self.center, self.radius

    def bounding_box(self):
        c, r = self.bounding_sphere()
        return c - r, c + r

    def patches(self):
        ff = self.flat_face
        curved = [CapPatch(self.center, self.radius, self.axis, self.alpha, p) for p in range(5)]
        flat = [DiscPatch(ff.center, ff.radius, ff.normal, p) for p in range(5)]
        return curved + flat


class HalfBall(SphericalCap):
    """Half of a ball whose flat face has outward normal ``face_normal``."""

    kind = "half_ball"

    def __init__(self, center, radius, face_normal=(0.0, 0.0, 1.0)):
        super().__init__(center, radius, -_unit(face_normal), 0.0)

    def to_dict(self):
        return {"type": "half_ball", "center": self.center.tolist(), "radius": self.radius,
                "face_normal": (-self.axis).tolist()}


class PolyhedronStub:
    """Face-list record for polyhedral obstacles; documented but not solvable."""

    kind = "polyhedron"

    def __init__(self, vertices, faces):
        self.vertices = np.asarray(vertices, float)
        self.faces = [list(f) for f in faces]

    def to_dict(self):
        return {"type": "polyhedron", "vertices": self.vertices.tolist(), "faces": self.faces}


SUPPORTED_SHAPES = ("ball", "cap", "half_ball")


def shape_from_dict(d: dict):
    t = d.get("type")
    if t == "ball":
        return Ball(d["center"], d["radius"])
    if t == "cap":
        return SphericalCap(d["center"], d["radius"], d["axis"], d["offset"])
    if t == "half_ball":
        return HalfBall(d["center"], d["radius"], d.get("face_normal", (0.0, 0.0, 1.0)))
    if t == "polyhedron":
        return PolyhedronStub(d["vertices"], d["faces"])
    raise ConfigurationError(f"unsupported shape descriptor {t!r}; supported: {', '.join(SUPPORTED_SHAPES)}")


def _require_supported(shape, what):
    if shape is not None and getattr(shape, "kind", None) not in SUPPORTED_SHAPES:
        raise ConfigurationError(f"unsupported shape {getattr(shape, 'kind', type(shape).__name__)!r} for {what}; "
                                 f"supported: {', '.join(SUPPORTED_SHAPES)}")


# ---------------------------------------------------------------------------
# Contacts, media, scenes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanarContact:
    """Contact disc in a plane; ``plane_normal`` points from the obstacle into the medium."""

    plane_point: np.ndarray
    plane_normal: np.ndarray
    center: np.ndarray
    radius: float

    def __post_init__(self):
        n = np.asarray(self.plane_normal, float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ConfigurationError(f"plane_normal must be a unit vector (|n| = {np.linalg.norm(n)!r})")
        p = np.asarray(self.plane_point, float).reshape(3)
        c = np.asarray(self.center, float).reshape(3)
        if abs((c - p) @ n) > 1e-12 * max(1.0, np.linalg.norm(c - p)):
            raise ConfigurationError("contact disc centre does not lie in the contact plane")
        if self.radius <= 0:
            raise ConfigurationError("contact radius must be positive")
        object.__setattr__(self, "plane_normal", n)
        object.__setattr__(self, "plane_point", p)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def reflect(self, x) -> np.ndarray:
        return reflect_point(self, x)

    def plane_distance(self, pts) -> np.ndarray:
        return (np.atleast_2d(pts) - self.plane_point) @ self.plane_normal

    def in_disc(self, pts, tol=1e-9) -> np.ndarray:
        pts = np.atleast_2d(pts)
        d = self.plane_distance(pts)
        inplane = pts - d[:, None] * self.plane_normal - self.center
        return (np.abs(d) <= tol) & (np.linalg.norm(inplane, axis=1) <= self.radius + tol)

    def to_dict(self):
        return {"plane_point": self.plane_point.tolist(), "plane_normal": self.plane_normal.tolist(),
                "center": self.center.tolist(), "radius": self.radius}


def reflect_point(contact: PlanarContact, x) -> np.ndarray:
    """Mirror image x - 2((x - p).n) n; works on a single point or an (n, 3) array."""
    x = np.asarray(x, float)
    n = contact.plane_normal
    d = (x - contact.plane_point) @ n
    return x - 2.0 * np.multiply.outer(d, n) if x.ndim > 1 else x - 2.0 * d * n


class Contrast:
    """Sampler of 1 - q with a Lipschitz bound."""

    lipschitz = 0.0

    def __call__(self, pts) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantContrast(Contrast):
    value: complex

    @property
    def lipschitz(self):
        return 0.0

    def __call__(self, pts):
        return np.full(len(np.atleast_2d(pts)), complex(self.value))

    def to_dict(self):
        return {"type": "constant", "value": [complex(self.value).real, complex(self.value).imag]}


@dataclass(frozen=True)
class GaussianContrast(Contrast):
    """base + amplitude * exp(-|x - center|^2 / width^2)."""

    base: complex
    amplitude: complex
    center: tuple
    width: float

    @property
    def lipschitz(self):
        return float(abs(self.amplitude) * np.sqrt(2.0) / self.width * np.exp(-0.5))

    def __call__(self, pts):
        r2 = np.sum((np.atleast_2d(pts) - np.asarray(self.center, float)) ** 2, axis=1)
        return complex(self.base) + complex(self.amplitude) * np.exp(-r2 / self.width**2)

    def to_dict(self):
        return {"type": "gaussian", "base": [complex(self.base).real, complex(self.base).imag],
                "amplitude": [complex(self.amplitude).real, complex(self.amplitude).imag],
                "center": list(self.center), "width": self.width}


def contrast_from_dict(d) -> Contrast:
    if isinstance(d, (int, float)):
        return ConstantContrast(complex(d))
    t = d.get("type", "constant")
    cplx = lambda v: complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)  # noqa: E731
    if t == "constant":
        return ConstantContrast(cplx(d["value"]))
    if t == "gaussian":
        return GaussianContrast(cplx(d["base"]), cplx(d["amplitude"]), tuple(d["center"]), float(d["width"]))
    raise ConfigurationError(f"unknown contrast type {t!r}")


@dataclass
class MediumComponent:
    shape: object
    contrast: Contrast
    eps0: float = 1e-3
    contact: PlanarContact | None = None

    def __post_init__(self):
        _require_supported(self.shape, "a medium component")

    @property
    def lipschitz(self):
        return self.contrast.lipschitz

    def to_dict(self):
        d = {"shape": self.shape.to_dict(), "contrast": self.contrast.to_dict(), "eps0": self.eps0}
        if self.contact is not None:
            d["contact"] = self.contact.to_dict()
        return d


@dataclass
class SceneC:
    obstacle: object | None
    media: list = field(default_factory=list)
    wave_number: float = 1.0
    enclosing_radius: float = 5.0

    def __post_init__(self):
        if self.wave_number <= 0:
            raise ConfigurationError("wave_number must be positive")
        _require_supported(self.obstacle, "the obstacle")
        if self.obstacle is not None and self.obstacle.kind == "cap" and self.obstacle.offset != 0.0:
            pass  # general caps allowed as obstacles too

    @property
    def contacted(self):
        return [m for m in self.media if m.contact is not None]

    @property
    def detached(self):
        return [m for m in self.media if m.contact is None]

    def components(self):
        out = [self.obstacle] if self.obstacle is not None else []
        return out + [m.shape for m in self.media]

    def inside_obstacle(self, pts, tol=0.0):
        if self.obstacle is None:
            return np.zeros(len(np.atleast_2d(pts)), bool)
        return self.obstacle.contains(pts, tol)

    def inside_sigma(self, pts, tol=0.0):
        pts = np.atleast_2d(pts)
        inside = self.inside_obstacle(pts, -tol) if tol else self.inside_obstacle(pts)
        for m in self.media:
            inside |= m.shape.signed_distance(pts) < tol
        return inside

    def sigma_distance(self, pts):
        """Lower bound on the distance to Sigma (negative inside)."""
        pts = np.atleast_2d(pts)
        d = np.full(len(pts), np.inf)
        for s in self.components():
            d = np.minimum(d, s.signed_distance(pts))
        return d

    def contrast_at(self, pts):
        pts = np.atleast_2d(pts)
        out = np.zeros(len(pts), complex)
        for m in self.media:
            ins = m.shape.contains(pts, -1e-12)
            if np.any(ins):
                out[ins] = m.contrast(pts[ins])
        return out

    def bounding_box(self):
        comps = self.components()
        if not comps:
            return -np.ones(3), np.ones(3)
        lo = np.min([c.bounding_box()[0] for c in comps], axis=0)
        hi = np.max([c.bounding_box()[1] for c in comps], axis=0)
        return lo, hi

    def diameter(self):
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def to_dict(self):
        return {"obstacle": None if self.obstacle is None else self.obstacle.to_dict(),
                "media": [m.to_dict() for m in self.media],
                "wave_number": self.wave_number, "enclosing_radius": self.enclosing_radius}


def scene_from_dict(d: dict) -> SceneC:
    obs = d.get("obstacle")
    obstacle = shape_from_dict(obs) if obs else None
    media = []
    for md in d.get("media", []):
        contact = None
        if md.get("contact") == "auto":
            if obstacle is None:
                raise ConfigurationError("contact 'auto' needs an obstacle")
            contact = contact_for_cap(obstacle, shape_from_dict(md["shape"]))
        elif md.get("contact"):
            c = md["contact"]
            contact = PlanarContact(np.array(c["plane_point"], float), _unit(c["plane_normal"]),
                                    np.array(c["center"], float), float(c["radius"]))
        media.append(MediumComponent(shape_from_dict(md["shape"]), contrast_from_dict(md["contrast"]),
                                     float(md.get("eps0", 1e-3)), contact))
    return SceneC(obstacle, media, float(d.get("wave_number", 1.0)), float(d.get("enclosing_radius", 5.0)))


def contact_for_cap(obstacle: SphericalCap, medium: SphericalCap) -> PlanarContact:
    """Contact disc of a cap medium resting on the flat face of a cap obstacle."""
    ff = medium.flat_face
    of = obstacle.flat_face
    if ff is None or of is None:
        raise ConfigurationError("a planar contact needs flat faces on both the obstacle and the medium")
    n = _unit(of.normal)
    return PlanarContact(of.center, n, ff.center, ff.radius)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_interior(shape, n, rng) -> np.ndarray:
    lo, hi = shape.bounding_box()
    out = []
    count = 0
    while count < n:
        p = rng.uniform(lo, hi, size=(max(2 * n, 64), 3))
        p = p[shape.contains(p)]
        out.append(p)
        count += len(p)
    return np.concatenate(out)[:n]


def sample_surface(shape, n, rng, label=None) -> np.ndarray:
    """Area-uniform random points on the boundary (optionally one face label only)."""
    patches = [p for p in shape.patches() if label is None or p.label == label]
    pts = []
    grid = np.linspace(-1, 1, 9)
    A, B = np.meshgrid(grid, grid)
    jmax = []
    for p in patches:
        _, xa, xb = p.eval(A.ravel(), B.ravel())
        jmax.append(np.max(np.linalg.norm(np.cross(xa, xb), axis=1)) * 1.5)
    areas = np.array(jmax)
    total = 0
    while total < n:
        which = rng.choice(len(patches), size=4 * n, p=areas / areas.sum())
        a = rng.uniform(-1, 1, 4 * n)
        b = rng.uniform(-1, 1, 4 * n)
        u = rng.uniform(0, 1, 4 * n)
        for k, p in enumerate(patches):
            sel = which == k
            if not np.any(sel):
                continue
            x, xa, xb = p.eval(a[sel], b[sel])
            jac = np.linalg.norm(np.cross(xa, xb), axis=1)
            keep = u[sel] * jmax[k] < jac
            pts.append(x[keep])
            total += int(keep.sum())
    allp = np.concatenate(pts)
    return allp[rng.permutation(len(allp))[:n]]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

CONDITIONS = ("i", "ii", "iii", "iv", "v", "vi")


@dataclass
class ConditionResult:
    passed: bool
    message: str = ""
    witnesses: list = field(default_factory=list)

    def to_dict(self):
        return {"passed": self.passed, "message": self.message,
                "witnesses": [np.asarray(w).tolist() for w in self.witnesses]}


@dataclass
class ValidationReport:
    conditions: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def failed(self):
        return [k for k, c in self.conditions.items() if not c.passed]

    def to_dict(self):
        return {"passed": self.passed, "conditions": {k: v.to_dict() for k, v in self.conditions.items()}}


def _fail(msg, pts):
    pts = np.atleast_2d(pts)
    return ConditionResult(False, msg, [pts[0]])


def _check_complement(scene, voxels):
    lo, hi = scene.bounding_box()
    pad = (hi - lo) * 2.0 / voxels + 1e-6
    lo, hi = lo - pad, hi + pad
    axes = [np.linspace(lo[i], hi[i], voxels) for i in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    inside = scene.inside_sigma(pts).reshape(X.shape)
    labels, nlab = ndimage.label(~inside)
    border = set(np.unique(np.concatenate([labels[0].ravel(), labels[-1].ravel(), labels[:, 0].ravel(),
                                           labels[:, -1].ravel(), labels[:, :, 0].ravel(),
                                           labels[:, :, -1].ravel()])))
    border.discard(0)
    cavities = [lab for lab in range(1, nlab + 1) if lab not in border]
    if cavities:
        idx = np.argwhere(labels == cavities[0])[0]
        return _fail("complement of Sigma is not connected (enclosed cavity)", pts[np.ravel_multi_index(idx, X.shape)])
    for s in scene.components():
        c, r = s.bounding_sphere()
        if np.linalg.norm(c) + r > scene.enclosing_radius:
            return _fail("Sigma is not contained in the enclosing ball", c)
    return ConditionResult(True, "compact with connected complement")


def validate_class_c(scene: SceneC, samples_per_component: int = 10_000, voxels: int = 64,
                     seed: int = 0, tol: float = 1e-9) -> ValidationReport:
    """Check conditions i)-vi) of the class-C definition by sampling and flood fill."""
    if samples_per_component < 100:
        raise ConfigurationError("samples_per_component must be at least 100")
    for s in scene.components():
        _require_supported(s, "validation")
    rng = np.random.default_rng(seed)
    n = samples_per_component
    interior = [sample_interior(m.shape, n, rng) for m in scene.media]
    surface = [sample_surface(m.shape, n, rng) for m in scene.media]
    res = {}

    res["i"] = _check_complement(scene, voxels)

    # ii) media lie in G = R^3 \ closure(D)
    res["ii"] = ConditionResult(True, "media lie outside the obstacle")
    if scene.obstacle is not None:
        for k, pts in enumerate(interior):
            bad = scene.obstacle.contains(pts, tol)
            if np.any(bad):
                res["ii"] = _fail(f"medium {k} overlaps the obstacle interior", pts[bad])
                break

    # iii) contrast bounds and Lipschitz continuity
    res["iii"] = ConditionResult(True, "|1-q| >= eps0, Im q >= 0, Lipschitz bound holds")
    for k, (m, pts) in enumerate(zip(scene.media, interior)):
        c = m.contrast(pts)
        bad = np.abs(c) < m.eps0
        if np.any(bad):
            res["iii"] = _fail(f"medium {k}: |1-q| below eps0={m.eps0}", pts[bad])
            break
        bad = c.imag > tol  # Im q = -Im(1-q)
        if np.any(bad):
            res["iii"] = _fail(f"medium {k}: Im q < 0", pts[bad])
            break
        j = rng.permutation(len(pts))
        dist = np.linalg.norm(pts - pts[j], axis=1)
        ok = dist > 0
        quot = np.abs(c[ok] - c[j][ok]) / dist[ok]
        if np.any(quot > m.lipschitz * (1 + 1e-9) + 1e-12):
            res["iii"] = _fail(f"medium {k}: difference quotient exceeds Lipschitz bound", pts[ok][quot.argmax()])
            break

    # iv) planar contact only, disjoint closures between components
    res["iv"] = ConditionResult(True, "obstacle-medium contacts are planar discs; components disjoint")
    for k, (m, bpts) in enumerate(zip(scene.media, surface)):
        if scene.obstacle is not None:
            sd = scene.obstacle.signed_distance(bpts)
            touching = sd <= tol
            if m.contact is None:
                if np.any(touching):
                    res["iv"] = _fail(f"medium {k} touches the obstacle without a declared contact", bpts[touching])
                    break
            else:
                bad = touching & ~m.contact.in_disc(bpts, 1e-7)
                if np.any(bad):
                    res["iv"] = _fail(f"medium {k} meets the obstacle outside its contact disc", bpts[bad])
                    break
                msg = _contact_geometry_problem(scene.obstacle, m)
                if msg:
                    res["iv"] = _fail(f"medium {k}: {msg}", m.contact.center)
                    break
        elif m.contact is not None:
            res["iv"] = _fail(f"medium {k} declares a contact but there is no obstacle", m.contact.center)
            break
        for k2, m2 in enumerate(scene.media):
            if k2 == k:
                continue
            bad = m2.shape.signed_distance(bpts) <= tol
            if np.any(bad):
                res["iv"] = _fail(f"media {k} and {k2} have intersecting closures", bpts[bad])
                break
        if not res["iv"].passed:
            break

    # v) exterior medium boundary is smooth: flat faces must be entirely in contact
    res["v"] = ConditionResult(True, "exterior medium boundaries are smooth")
    for k, m in enumerate(scene.media):
        ff = m.shape.flat_face
        if ff is None:
            continue
        if m.contact is None:
            res["v"] = _fail(f"medium {k} has an exposed flat face with an edge", ff.center)
            break
        gap = ff.radius - m.contact.radius + np.linalg.norm(ff.center - m.contact.center)
        if gap > 1e-7:
            t1, _, _ = orthonormal_frame(ff.normal)
            res["v"] = _fail(f"medium {k}: flat face not covered by the contact disc", ff.center + ff.radius * t1)
            break

    # vi) reflected components are disjoint
    res["vi"] = ConditionResult(True, "reflected contacted components are pairwise disjoint and miss Omega_0")
    contacted = [(k, m) for k, m in enumerate(scene.media) if m.contact is not None]
    detached = [m for m in scene.media if m.contact is None]
    for k, m in contacted:
        pts = interior[k]
        both = np.vstack([pts, reflect_point(m.contact, pts)])
        for k2, m2 in contacted:
            if k2 == k:
                continue
            bad = m2.shape.contains(both) | m2.shape.contains(reflect_point(m2.contact, both))
            if np.any(bad):
                res["vi"] = _fail(f"reflected components {k} and {k2} intersect", both[bad])
                break
        if not res["vi"].passed:
            break
        for m0 in detached:
            bad = m0.shape.contains(both)
            if np.any(bad):
                res["vi"] = _fail(f"reflected component {k} meets a detached component", both[bad])
                break
        if not res["vi"].passed:
            break
    return ValidationReport(res)


def _contact_geometry_problem(obstacle, m: MediumComponent) -> str:
    c = m.contact
    of = obstacle.flat_face
    if of is None:
        return "obstacle has no flat face to carry the contact"
    if np.linalg.norm(of.normal - c.plane_normal) > 1e-9 or abs((of.center - c.plane_point) @ c.plane_normal) > 1e-9:
        return "contact plane is not the obstacle's flat face"
    if np.linalg.norm(c.center - of.center) + c.radius > of.radius + 1e-9:
        return "contact disc extends beyond the obstacle face"
    mf = m.shape.flat_face
    if mf is None:
        return "contacted medium has no flat face"
    if np.linalg.norm(mf.normal + c.plane_normal) > 1e-9 or abs((mf.center - c.plane_point) @ c.plane_normal) > 1e-9:
        return "medium flat face is not in the contact plane"
    return ""


# ---------------------------------------------------------------------------
# Boundary partition
# ---------------------------------------------------------------------------

@dataclass
class LabeledCloud:
    points: np.ndarray
    normals: np.ndarray
    labels: np.ndarray
    owners: np.ndarray  # -1 obstacle, k >= 0 medium index

    def select(self, label):
        m = self.labels == label
        return LabeledCloud(self.points[m], self.normals[m], self.labels[m], self.owners[m])

    def __len__(self):
        return len(self.points)


def _face_points(shape, label, count):
    """Stratified points on one face label: a g x g parameter grid per patch."""
    patches = [p for p in shape.patches() if p.label == label]
    g = max(2, int(np.ceil(np.sqrt(count / len(patches)))))
    t = (np.arange(g) + 0.5) / g * 2 - 1
    A, B = np.meshgrid(t, t)
    pts, nrm, w = [], [], []
    for p in patches:
        x, xa, xb = p.eval(A.ravel(), B.ravel())
        nn = np.cross(xa, xb)
        jac = np.linalg.norm(nn, axis=1)
        pts.append(x)
        nrm.append(nn / jac[:, None])
        w.append(jac)
    pts, nrm, w = np.concatenate(pts), np.concatenate(nrm), np.concatenate(w)
    if len(pts) > count:
        # thin by area weight so the cloud stays near-uniform
        order = np.argsort(-w, kind="stable")
        keep = np.sort(order[np.linspace(0, len(order) - 1, count).astype(int)])
        pts, nrm = pts[keep], nrm[keep]
    return pts, nrm


def boundary_partition(scene: SceneC, n_points: int) -> LabeledCloud:
    """Labelled points on dSigma and the contact discs, with outward normals of their owner."""
    faces = []
    if scene.obstacle is not None:
        for lab, area in scene.obstacle.face_areas().items():
            faces.append((-1, scene.obstacle, lab, area))
    for k, m in enumerate(scene.media):
        for lab, area in m.shape.face_areas().items():
            faces.append((k, m.shape, lab, area))
    if not faces:
        raise ConfigurationError("scene has no boundary to partition")
    total = sum(f[3] for f in faces)
    counts = [int(round(n_points * f[3] / total)) for f in faces]
    if min(counts) < 10:
        raise ConfigurationError(f"n_points={n_points} leaves fewer than 10 points on some face")
    P, N, L, O = [], [], [], []
    contacts = [m.contact for m in scene.media if m.contact is not None]
    for (owner, shape, lab, _), cnt in zip(faces, counts):
        pts, nrm = _face_points(shape, lab, cnt)
        labels = np.full(len(pts), "obstacle_exterior" if owner < 0 else "medium_exterior", dtype=object)
        if lab == "flat":
            for c in contacts:
                labels[c.in_disc(pts, 1e-9)] = "contact"
        P.append(pts), N.append(nrm), L.append(labels), O.append(np.full(len(pts), owner))
    return LabeledCloud(np.concatenate(P), np.concatenate(N), np.concatenate(L).astype(str), np.concatenate(O))
