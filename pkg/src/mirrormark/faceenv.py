"""Synthetic mirror environment.

Renders a parametric robot face as a pure function of head pose, injects
rectangular marks with pixel-exact ground truth, and provides the analytic
centroid-to-joints map used to generate visuomotor training data.

The face is built from flat-shaded primitives (head ellipse, eyes, mouth)
that translate rigidly with pose at a fixed pixels-per-degree gain. Offsets
are rounded to whole pixels, so feature centroids shift by exactly
``round(gain * degrees)`` and renders are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Default palette for injected marks. Chosen to keep at least 0.1 contrast
# against every large surface albedo of both face styles.
MARK_PALETTE = (0.1, 0.35, 0.65, 0.9)

DEFAULT_MARK_SIZE = (14, 14)

POSE_RANGE_DEG = 5.0
PIXELS_PER_DEGREE = 2.0
NOISE_AMPLITUDE = 0.01

JOINT_NAMES = ("HeadYaw", "HeadPitch", "LShoulderPitch", "LShoulderRoll", "LElbowRoll")

# Per-joint angle limits in degrees, matching the humanoid platform the
# joint names come from.
JOINT_LIMITS_DEG = np.array(
    [
        [-119.5, 119.5],  # HeadYaw
        [-38.5, 29.5],    # HeadPitch
        [-119.5, 119.5],  # LShoulderPitch
        [-18.0, 76.0],    # LShoulderRoll
        [-88.5, -2.0],    # LElbowRoll
    ]
)

# Posture produced by ground_truth_reach at the image center.
REACH_CENTER_POSTURE = np.array([0.0, 0.0, -40.0, 30.0, -45.0])

# Upper bound on the joint-space displacement per pixel of centroid motion
# (Euclidean over all five joints). The analytic map stays below this.
REACH_LIPSCHITZ_BOUND_DEG_PER_PX = 1.8


@dataclass(frozen=True)
class HeadPose:
    """Head motor state in degrees."""

    yaw: float
    pitch: float


@dataclass(frozen=True)
class MarkSpec:
    """A flat rectangular mark: top-left (row, col), size (h, w), intensity."""

    top_left: tuple[int, int]
    size: tuple[int, int] = DEFAULT_MARK_SIZE
    intensity: float = 0.9

    def slices(self) -> tuple[slice, slice]:
        r, c = self.top_left
        h, w = self.size
        return slice(r, r + h), slice(c, c + w)

    def center(self) -> tuple[float, float]:
        """Centroid of the mark rectangle (pixel-center convention)."""
        r, c = self.top_left
        h, w = self.size
        return (r + (h - 1) / 2.0, c + (w - 1) / 2.0)

    def to_dict(self) -> dict:
        return {
            "top_left": [int(self.top_left[0]), int(self.top_left[1])],
            "size": [int(self.size[0]), int(self.size[1])],
            "intensity": float(self.intensity),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarkSpec":
        return cls(
            top_left=(int(d["top_left"][0]), int(d["top_left"][1])),
            size=(int(d["size"][0]), int(d["size"][1])),
            intensity=float(d["intensity"]),
        )


@dataclass(frozen=True)
class GroundTruth:
    """Pixel-exact truth for an injected mark."""

    mark: MarkSpec
    mask: np.ndarray  # bool, same shape as the image


@dataclass(frozen=True)
class FaceStyle:
    """Parametric face appearance.

    Geometry is expressed as fractions of the image dimensions so the same
    style renders at any resolution. Albedos are flat intensities in [0, 1].
    """

    style_id: str
    background: float
    face_albedo: float
    eye_albedo: float
    mouth_albedo: float
    head_axes: tuple[float, float]      # (semi-height, semi-width) as fractions of H, W
    eye_shape: str                      # "rect" or "disc"
    eye_offset: tuple[float, float]     # (rows up from center, cols out from center)
    eye_size: tuple[float, float]       # rect: (h, w) fractions; disc: (radius, radius)
    mouth_offset: float                 # rows below center
    mouth_size: tuple[float, float]     # (h, w) fractions
    brow: bool = False                  # optional brow bar above the eyes
    brow_albedo: float = 0.9


STYLE_A = FaceStyle(
    style_id="A",
    background=0.20,
    face_albedo=0.80,
    eye_albedo=0.45,
    mouth_albedo=0.45,
    head_axes=(0.31, 0.25),
    eye_shape="rect",
    eye_offset=(0.09, 0.11),
    eye_size=(0.08, 0.08),
    mouth_offset=0.14,
    mouth_size=(0.05, 0.23),
)

STYLE_B = FaceStyle(
    style_id="B",
    background=0.25,
    face_albedo=0.55,
    eye_albedo=0.95,
    mouth_albedo=0.90,
    head_axes=(0.27, 0.23),
    eye_shape="disc",
    eye_offset=(0.08, 0.09),
    eye_size=(0.055, 0.055),
    mouth_offset=0.11,
    mouth_size=(0.03, 0.30),
    brow=True,
    brow_albedo=0.90,
)

_STYLES = {"A": STYLE_A, "B": STYLE_B}


def get_style(style_id: str) -> FaceStyle:
    try:
        return _STYLES[style_id]
    except KeyError:
        raise ValueError(f"unknown face style {style_id!r} (expected one of {sorted(_STYLES)})") from None


@dataclass(frozen=True)
class MirrorEnv:
    """Rendering environment: a face style plus image geometry and noise.

    All methods are pure; RNG state is caller-supplied via seeds.
    """

    style: FaceStyle = STYLE_A
    height: int = 64
    width: int = 64
    pixels_per_degree: float = PIXELS_PER_DEGREE
    noise_amplitude: float = NOISE_AMPLITUDE
    pose_range: float = POSE_RANGE_DEG

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ValueError("image dimensions must be positive")
        max_off = self._max_offset()
        semi_r, semi_c = self._head_semiaxes()
        cy, cx = self.height // 2, self.width // 2
        if cy - semi_r - max_off < 0 or cy + semi_r + max_off > self.height - 1:
            raise ValueError("face does not fit vertically at maximum pose offset")
        if cx - semi_c - max_off < 0 or cx + semi_c + max_off > self.width - 1:
            raise ValueError("face does not fit horizontally at maximum pose offset")

    # -- geometry ---------------------------------------------------------

    def _head_semiaxes(self) -> tuple[int, int]:
        ar = max(2, int(round(self.style.head_axes[0] * self.height)))
        ac = max(2, int(round(self.style.head_axes[1] * self.width)))
        return ar, ac

    def _max_offset(self) -> int:
        return int(round(self.pose_range * self.pixels_per_degree))

    def _pose_offset(self, pose: HeadPose) -> tuple[int, int]:
        self._check_pose(pose)
        dr = int(round(pose.pitch * self.pixels_per_degree))
        dc = int(round(pose.yaw * self.pixels_per_degree))
        return dr, dc

    def _check_pose(self, pose: HeadPose) -> None:
        lim = self.pose_range
        if not (-lim <= pose.yaw <= lim and -lim <= pose.pitch <= lim):
            raise ValueError(
                f"pose ({pose.yaw}, {pose.pitch}) outside training range +-{lim} degrees"
            )

    # -- rendering --------------------------------------------------------

    def face_mask(self, pose: HeadPose) -> np.ndarray:
        """Boolean mask of the head ellipse at the given pose."""
        dr, dc = self._pose_offset(pose)
        cy, cx = self.height // 2 + dr, self.width // 2 + dc
        ar, ac = self._head_semiaxes()
        rr, cc = np.ogrid[: self.height, : self.width]
        return ((rr - cy) / ar) ** 2 + ((cc - cx) / ac) ** 2 <= 1.0

    def render(self, pose: HeadPose, noise_seed=None) -> np.ndarray:
        """Render the face at a head pose.

        Deterministic given (style, pose, noise_seed). With a seed, uniform
        additive noise of the configured amplitude is applied and the result
        clamped to [0, 1]; with ``noise_seed=None`` the render is noise free.
        """
        s = self.style
        dr, dc = self._pose_offset(pose)
        cy, cx = self.height // 2 + dr, self.width // 2 + dc

        img = np.full((self.height, self.width), s.background, dtype=np.float64)
        img[self.face_mask(pose)] = s.face_albedo

        H, W = self.height, self.width
        ar, _ = self._head_semiaxes()
        eye_dr = int(round(s.eye_offset[0] * H))
        eye_dc = int(round(s.eye_offset[1] * W))
        if s.eye_shape == "rect":
            eh = max(1, int(round(s.eye_size[0] * H)))
            ew = max(1, int(round(s.eye_size[1] * W)))
            for side in (-1, 1):
                r0 = cy - eye_dr - eh // 2
                c0 = cx + side * eye_dc - ew // 2
                img[r0 : r0 + eh, c0 : c0 + ew] = s.eye_albedo
        else:
            rad = max(1, int(round(s.eye_size[0] * min(H, W))))
            rr, cc = np.ogrid[:H, :W]
            for side in (-1, 1):
                ey, ex = cy - eye_dr, cx + side * eye_dc
                img[(rr - ey) ** 2 + (cc - ex) ** 2 <= rad * rad] = s.eye_albedo

        mh = max(1, int(round(s.mouth_size[0] * H)))
        mw = max(1, int(round(s.mouth_size[1] * W)))
        r0 = cy + int(round(s.mouth_offset * H)) - mh // 2
        c0 = cx - mw // 2
        img[r0 : r0 + mh, c0 : c0 + mw] = s.mouth_albedo

        if s.brow:
            bh = max(1, int(round(0.025 * H)))
            bw = max(1, int(round(0.20 * W)))
            r0 = cy - int(round(0.19 * H)) - bh // 2
            c0 = cx - bw // 2
            img[r0 : r0 + bh, c0 : c0 + bw] = s.brow_albedo

        if noise_seed is not None:
            rng = np.random.default_rng(noise_seed)
            img += rng.uniform(-self.noise_amplitude, self.noise_amplitude, img.shape)
            np.clip(img, 0.0, 1.0, out=img)
        return img


def render_face(env: MirrorEnv, pose: HeadPose, noise_seed=None) -> np.ndarray:
    return env.render(pose, noise_seed)


def inject_mark(img: np.ndarray, mark: MarkSpec) -> tuple[np.ndarray, GroundTruth]:
    """Return a copy of ``img`` with the mark painted in, plus ground truth.

    Only the mark rectangle is modified. Marks that do not lie entirely
    within the image are rejected.
    """
    h, w = mark.size
    r, c = mark.top_left
    H, W = img.shape
    if h <= 0 or w <= 0:
        raise ValueError("mark size must be positive")
    if not (0.0 <= mark.intensity <= 1.0):
        raise ValueError("mark intensity must lie in [0, 1]")
    if r < 0 or c < 0 or r + h > H or c + w > W:
        raise ValueError(f"mark {mark} does not fit inside a {H}x{W} image")
    out = img.copy()
    rs, cs = mark.slices()
    out[rs, cs] = mark.intensity
    mask = np.zeros((H, W), dtype=bool)
    mask[rs, cs] = True
    return out, GroundTruth(mark=mark, mask=mask)


def sample_mark(
    rng,
    shape: tuple[int, int],
    palette=MARK_PALETTE,
    size: tuple[int, int] = DEFAULT_MARK_SIZE,
) -> MarkSpec:
    """Sample a mark uniformly: location over all valid top-left positions,
    intensity over the palette. ``rng`` is a seed or a numpy Generator."""
    H, W = shape
    h, w = size
    if len(palette) == 0:
        raise ValueError("palette must be nonempty")
    if h > H or w > W:
        raise ValueError(f"a {h}x{w} mark does not fit in a {H}x{W} image")
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    r = int(gen.integers(0, H - h + 1))
    c = int(gen.integers(0, W - w + 1))
    intensity = float(palette[int(gen.integers(0, len(palette)))])
    return MarkSpec(top_left=(r, c), size=(h, w), intensity=intensity)


# -- analytic reach oracle ------------------------------------------------

def ground_truth_reach(c: tuple[float, float], height: int = 64, width: int = 64) -> np.ndarray:
    """Map an image-plane centroid (row, col) to a five-joint reach posture.

    Smooth injective map: a dominant affine term plus bounded sinusoidal
    nonlinearity, anchored so the image center maps to
    ``REACH_CENTER_POSTURE``. Outputs stay strictly inside
    ``JOINT_LIMITS_DEG`` for any in-bounds centroid.
    """
    row, col = float(c[0]), float(c[1])
    if not (0.0 <= row <= height - 1 and 0.0 <= col <= width - 1):
        raise ValueError(f"centroid {c} outside {height}x{width} image bounds")
    v = (row - (height - 1) / 2.0) / ((height - 1) / 2.0)
    u = (col - (width - 1) / 2.0) / ((width - 1) / 2.0)
    q = np.array(
        [
            20.0 * u + 3.0 * np.sin(1.5 * v),
            15.0 * v + 3.0 * np.sin(1.5 * u),
            -40.0 + 25.0 * v + 5.0 * np.sin(2.0 * u),
            30.0 + 20.0 * u + 6.0 * np.sin(2.0 * v),
            -45.0 + 15.0 * u + 12.0 * v + 4.0 * np.sin(u + v),
        ]
    )
    return q


def joints_within_limits(q: np.ndarray, margin: float = 0.0) -> bool:
    lo, hi = JOINT_LIMITS_DEG[:, 0], JOINT_LIMITS_DEG[:, 1]
    return bool(np.all(q > lo + margin) and np.all(q < hi - margin))
