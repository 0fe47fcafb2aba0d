"""Parametric 2D articulated hand.

A hand is 21 joints: wrist, then 4 joints (knuckle -> tip) for each of
thumb/index/middle/ring/pinky. Poses are sampled in a "detected crop"
convention: global scale and wrist anchor are solved so the silhouette sits
centered, filling roughly 3/4 of the canvas side, which is what the
refinement pipeline sees after hand detection and square cropping.

All rendering is pure: identical inputs give identical float maps.
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from .utils import child_seed

FINGERS = ("thumb", "index", "middle", "ring", "pinky")
N_FINGERS = 5
N_JOINTS = 21

# Canonical geometry in hand units (multiplied by global_scale * canvas).
BASE_ANGLE = np.array([1.05, 0.30, 0.0, -0.28, -0.55])
META_LEN = np.array([0.32, 0.46, 0.48, 0.45, 0.40])
SEG_LEN = np.array(
    [
        [0.20, 0.15, 0.11],
        [0.22, 0.14, 0.10],
        [0.24, 0.15, 0.11],
        [0.22, 0.14, 0.10],
        [0.17, 0.11, 0.09],
    ]
)

# Anatomical sampling intervals (the "config table"). Hard bounds are wider
# only for curl, whose anatomical limit is [0, 1.9] rad.
ANATOMY = {
    "splay_range": np.array(
        [
            [-0.35, 0.30],
            [-0.20, 0.20],
            [-0.12, 0.12],
            [-0.20, 0.18],
            [-0.25, 0.30],
        ]
    ),
    "curl_sample_range": np.array([[0.0, 1.10], [0.0, 1.20], [0.0, 0.90]]),
    "curl_bound": (0.0, 1.9),
    "seg_factor_sample_range": (0.85, 1.15),
    "seg_factor_bound": (0.5, 1.5),
    "rotation_range": (-0.5, 0.5),
    "scale_bound": (0.25, 0.6),
}

# Bone capsule radius as a fraction of canvas; per-bone taper factors
# (metacarpal, proximal, middle, distal).
BONE_RADIUS_FRAC = 0.048
BONE_TAPER = (1.15, 0.95, 0.85, 0.72)

# Depth ramp endpoints: wrist near, fingertip far.
DEPTH_NEAR = 1.0
DEPTH_FAR = 0.2

# Silhouette occupancy targets for crop-normalized sampling.
_OCCUPANCY_RANGE = (0.64, 0.72)
_CENTER_JITTER = 1.5  # px


@dataclass
class HandPose:
    handedness: str  # "left" | "right"
    wrist_anchor: tuple  # unit canvas coords, pre-mirror
    global_rotation: float
    global_scale: float
    splay: np.ndarray  # (5,)
    curl: np.ndarray  # (5,3)
    seg_factor: np.ndarray  # (5,3)
    presence: np.ndarray  # (5,) bool
    malformed: bool = False
    extra_fingers: list = field(default_factory=list)  # [{"source": int, "splay_offset": float}]

    def copy(self) -> "HandPose":
        return HandPose(
            handedness=self.handedness,
            wrist_anchor=tuple(self.wrist_anchor),
            global_rotation=float(self.global_rotation),
            global_scale=float(self.global_scale),
            splay=self.splay.copy(),
            curl=self.curl.copy(),
            seg_factor=self.seg_factor.copy(),
            presence=self.presence.copy(),
            malformed=self.malformed,
            extra_fingers=[dict(e) for e in self.extra_fingers],
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wrist_anchor"] = [float(v) for v in self.wrist_anchor]
        d["splay"] = self.splay.tolist()
        d["curl"] = self.curl.tolist()
        d["seg_factor"] = self.seg_factor.tolist()
        d["presence"] = [bool(v) for v in self.presence]
        return d

    @staticmethod
    def from_dict(d: dict) -> "HandPose":
        return HandPose(
            handedness=d["handedness"],
            wrist_anchor=tuple(d["wrist_anchor"]),
            global_rotation=float(d["global_rotation"]),
            global_scale=float(d["global_scale"]),
            splay=np.asarray(d["splay"], dtype=np.float64),
            curl=np.asarray(d["curl"], dtype=np.float64),
            seg_factor=np.asarray(d["seg_factor"], dtype=np.float64),
            presence=np.asarray(d["presence"], dtype=bool),
            malformed=bool(d["malformed"]),
            extra_fingers=[dict(e) for e in d.get("extra_fingers", [])],
        )


@dataclass
class Skeleton2D:
    joints: np.ndarray  # (21, 2) pixel coords
    canvas_size: int

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=np.float64)
        if self.joints.shape != (N_JOINTS, 2):
            raise ValueError(f"expected (21,2) joints, got {self.joints.shape}")
        if not np.all(np.isfinite(self.joints)):
            raise ValueError("non-finite joint coordinates")

    def finger_joints(self, f: int) -> np.ndarray:
        return self.joints[1 + 4 * f : 5 + 4 * f]

    def to_list(self):
        return self.joints.tolist()


@dataclass
class StyleParams:
    style_id: int
    palette: tuple  # ((skin), (outline), (background)) unit RGB
    background_kind: str  # flat | gradient | hatch | noise
    stroke_width: float  # px
    texture_seed: int

    def __post_init__(self):
        if not 0 <= self.style_id <= 6:
            raise ValueError(f"style_id must be in [0,6], got {self.style_id}")

    def to_dict(self) -> dict:
        return {
            "style_id": self.style_id,
            "palette": [list(map(float, c)) for c in self.palette],
            "background_kind": self.background_kind,
            "stroke_width": float(self.stroke_width),
            "texture_seed": int(self.texture_seed),
        }

    @staticmethod
    def from_dict(d: dict) -> "StyleParams":
        return StyleParams(
            style_id=int(d["style_id"]),
            palette=tuple(tuple(c) for c in d["palette"]),
            background_kind=d["background_kind"],
            stroke_width=float(d["stroke_width"]),
            texture_seed=int(d["texture_seed"]),
        )


# 7 style categories: (skin, outline, background, background_kind).
STYLE_TABLE = (
    ((0.91, 0.76, 0.65), (0.22, 0.15, 0.12), (0.82, 0.86, 0.90), "flat"),
    ((0.99, 0.85, 0.88), (0.10, 0.08, 0.14), (0.65, 0.82, 0.99), "gradient"),
    ((0.72, 0.47, 0.34), (0.30, 0.18, 0.12), (0.93, 0.89, 0.80), "hatch"),
    ((0.45, 0.78, 0.45), (0.10, 0.25, 0.10), (0.97, 0.95, 0.70), "noise"),
    ((0.82, 0.86, 0.92), (0.35, 0.35, 0.42), (0.35, 0.30, 0.40), "flat"),
    ((0.55, 0.62, 0.95), (0.08, 0.10, 0.30), (0.95, 0.96, 0.99), "gradient"),
    ((0.95, 0.55, 0.25), (0.40, 0.12, 0.05), (0.20, 0.12, 0.25), "hatch"),
)

N_STYLES = len(STYLE_TABLE)


def make_style(style_id: int, texture_seed: int) -> StyleParams:
    """Instantiate a style category with per-character jitter.

    Jitter is small relative to the palette separation so style categories
    stay distinguishable by mean hand color.
    """
    skin, outline, bg, kind = STYLE_TABLE[style_id]
    rng = np.random.default_rng(child_seed(texture_seed, "style", style_id))
    jit = lambda c: tuple(np.clip(np.asarray(c) + rng.uniform(-0.02, 0.02, 3), 0.0, 1.0))
    stroke = 1.6 + rng.uniform(-0.4, 0.4)
    return StyleParams(
        style_id=style_id,
        palette=(jit(skin), jit(outline), jit(bg)),
        background_kind=kind,
        stroke_width=float(stroke),
        texture_seed=int(texture_seed),
    )


def default_bone_radius(canvas_size: int) -> float:
    return BONE_RADIUS_FRAC * canvas_size


def _finger_angles(pose: HandPose, f: int, splay_offset: float = 0.0) -> np.ndarray:
    """Absolute direction angle of the metacarpal and the 3 segments of finger f."""
    theta0 = -np.pi / 2 + pose.global_rotation + BASE_ANGLE[f] + pose.splay[f] + splay_offset
    return theta0 + np.concatenate([[0.0], np.cumsum(pose.curl[f])])


def _chain_points(pose: HandPose, f: int, canvas_size: int, splay_offset: float = 0.0):
    """Left-handed chain (wrist, mcp, pip, dip, tip) before any mirroring."""
    s = pose.global_scale * canvas_size
    wrist = np.asarray(pose.wrist_anchor, dtype=np.float64) * canvas_size
    angles = _finger_angles(pose, f, splay_offset)
    lengths = np.concatenate([[META_LEN[f]], SEG_LEN[f] * pose.seg_factor[f]]) * s
    pts = [wrist]
    p = wrist
    for ang, ln in zip(angles, lengths):
        p = p + ln * np.array([np.cos(ang), np.sin(ang)])
        pts.append(p)
    return np.stack(pts)


def forward_kinematics(pose: HandPose, canvas_size: int) -> Skeleton2D:
    """Compose wrist transform, per-finger splay and per-segment curls into 21 joints.

    Absent fingers collapse onto their knuckle (zero-length segments), so the
    joint count is always 21. A right hand is the exact x-mirror of the left
    hand with identical parameters.
    """
    joints = np.zeros((N_JOINTS, 2), dtype=np.float64)
    wrist = np.asarray(pose.wrist_anchor, dtype=np.float64) * canvas_size
    joints[0] = wrist
    for f in range(N_FINGERS):
        chain = _chain_points(pose, f, canvas_size)
        if not pose.presence[f]:
            chain[2:] = chain[1]  # stub at the knuckle
        joints[1 + 4 * f : 5 + 4 * f] = chain[1:]
    if pose.handedness == "right":
        joints[:, 0] = canvas_size - joints[:, 0]
    return Skeleton2D(joints=joints, canvas_size=canvas_size)


def extra_finger_chains(pose: HandPose, canvas_size: int):
    """Render-time chains for duplicated fingers; not part of the 21-joint skeleton."""
    chains = []
    for extra in pose.extra_fingers:
        chain = _chain_points(pose, int(extra["source"]), canvas_size, float(extra["splay_offset"]))
        if pose.handedness == "right":
            chain = chain.copy()
            chain[:, 0] = canvas_size - chain[:, 0]
        chains.append(chain)
    return chains


def _unit_offsets(pose: HandPose) -> np.ndarray:
    """All 21 joint offsets from the wrist at scale 1, canvas 1 (hand units)."""
    probe = pose.copy()
    probe.wrist_anchor = (0.0, 0.0)
    probe.global_scale = 1.0
    probe.handedness = "left"
    return forward_kinematics(probe, 1).joints


def sample_pose(rng_seed: int, handedness: str) -> HandPose:
    """Draw a well-formed pose, crop-normalized to the canvas.

    Deterministic given the seed. Global scale is solved so the silhouette
    spans a target fraction of the canvas and then clamped to the anatomical
    scale bound; the wrist anchor is solved so the silhouette is centered.
    """
    if handedness not in ("left", "right"):
        raise ValueError(f"handedness must be left|right, got {handedness!r}")
    rng = np.random.default_rng(child_seed(rng_seed, "pose", handedness))
    lo, hi = ANATOMY["splay_range"].T
    splay = rng.uniform(lo, hi)
    clo, chi = ANATOMY["curl_sample_range"].T
    curl = rng.uniform(clo, chi, size=(N_FINGERS, 3))
    flo, fhi = ANATOMY["seg_factor_sample_range"]
    seg_factor = rng.uniform(flo, fhi, size=(N_FINGERS, 3))
    rotation = rng.uniform(*ANATOMY["rotation_range"])
    occupancy = rng.uniform(*_OCCUPANCY_RANGE)
    jitter = rng.uniform(-_CENTER_JITTER, _CENTER_JITTER, size=2)

    pose = HandPose(
        handedness=handedness,
        wrist_anchor=(0.5, 0.5),
        global_rotation=float(rotation),
        global_scale=0.4,
        splay=splay,
        curl=curl,
        seg_factor=seg_factor,
        presence=np.ones(N_FINGERS, dtype=bool),
    )

    # Solve scale/anchor against a nominal 64 px canvas; both are stored as
    # canvas-relative quantities so any canvas size reproduces the framing.
    nominal = 64.0
    offsets = _unit_offsets(pose)
    span = float(np.ptp(offsets, axis=0).max())
    r_max = BONE_RADIUS_FRAC * nominal * max(BONE_TAPER)
    target = occupancy * nominal - 2.0 * r_max
    scale = target / (span * nominal)
    scale = float(np.clip(scale, *ANATOMY["scale_bound"]))
    center_off = (offsets.min(axis=0) + offsets.max(axis=0)) / 2.0 * scale * nominal
    wrist = np.array([nominal / 2.0, nominal / 2.0]) + jitter - center_off
    pose.global_scale = scale
    pose.wrist_anchor = (float(wrist[0] / nominal), float(wrist[1] / nominal))
    return pose


def corrupt_pose(pose: HandPose, rng_seed: int, severity: float) -> HandPose:
    """Structured corruption: deletion, duplication, curl scrambling, length distortion.

    The expected number of drawn operations is 3 * severity. Every operation
    moves joints (duplication also splits the source finger's splay), so the
    corrupted skeleton differs from the original except when zero operations
    are drawn.
    """
    if not 0.0 < severity <= 1.0:
        raise ValueError(f"severity must be in (0, 1], got {severity}")
    if pose.malformed:
        raise ValueError("corrupt_pose expects a well-formed pose")
    rng = np.random.default_rng(child_seed(rng_seed, "corrupt"))
    out = pose.copy()
    out.malformed = True
    n_ops = int(rng.binomial(4, 0.75 * severity))
    for _ in range(n_ops):
        op = rng.choice(4, p=[0.3, 0.2, 0.3, 0.2])
        present = np.flatnonzero(out.presence)
        if op == 0:  # delete
            if len(present) <= 1:
                continue
            out.presence[rng.choice(present)] = False
        elif op == 1:  # duplicate (6-finger render)
            f = int(rng.choice(present)) if len(present) else int(rng.integers(N_FINGERS))
            offset = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.28, 0.55))
            out.extra_fingers.append({"source": f, "splay_offset": offset})
            out.splay[f] -= 0.6 * offset
        elif op == 2:  # scramble curls beyond anatomical bounds
            f = int(rng.integers(N_FINGERS))
            out.curl[f] = rng.uniform(-1.0, 2.8, size=3)
            out.splay[f] += rng.uniform(-0.45, 0.45)
        else:  # distort segment lengths
            f = int(rng.integers(N_FINGERS))
            out.seg_factor[f] = np.clip(
                out.seg_factor[f] * rng.uniform(0.45, 1.9, size=3), 0.2, 2.3
            )
    return out


def _bone_list(skel: Skeleton2D, bone_radius: float, extra_chains=None):
    """Capsule list: (p0, p1, radius, depth0, depth1) per bone, depth by chain fraction."""
    bones = []

    def add_chain(chain_pts):
        seg = np.diff(chain_pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        total = seg_len.sum()
        if total <= 1e-12:
            total = 1.0
        cum = np.concatenate([[0.0], np.cumsum(seg_len)]) / total
        for k in range(4):
            d0 = DEPTH_NEAR + (DEPTH_FAR - DEPTH_NEAR) * cum[k]
            d1 = DEPTH_NEAR + (DEPTH_FAR - DEPTH_NEAR) * cum[k + 1]
            bones.append((chain_pts[k], chain_pts[k + 1], bone_radius * BONE_TAPER[k], d0, d1))

    wrist = skel.joints[0]
    for f in range(N_FINGERS):
        add_chain(np.concatenate([[wrist], skel.finger_joints(f)]))
    for chain in extra_chains or []:
        add_chain(np.asarray(chain, dtype=np.float64))
    return bones


def _rasterize(skel: Skeleton2D, canvas_size: int, bone_radius: float, extra_chains=None):
    """Composite depth map plus signed distance to the silhouette boundary.

    Returns (depth, sdf): depth is 0 on background and in [DEPTH_FAR, DEPTH_NEAR]
    on the hand (max rule at overlaps); sdf = min over bones of
    (distance to capsule axis - radius), negative inside the silhouette.
    """
    h = w = int(canvas_size)
    ys, xs = np.mgrid[0:h, 0:w]
    px = xs + 0.5
    py = ys + 0.5
    depth = np.zeros((h, w), dtype=np.float64)
    sdf = np.full((h, w), np.inf, dtype=np.float64)
    for p0, p1, radius, d0, d1 in _bone_list(skel, bone_radius, extra_chains):
        d = p1 - p0
        dd = float(d @ d)
        vx = px - p0[0]
        vy = py - p0[1]
        if dd <= 1e-18:
            t = np.zeros((h, w))
        else:
            t = np.clip((vx * d[0] + vy * d[1]) / dd, 0.0, 1.0)
        dist = np.hypot(vx - t * d[0], vy - t * d[1])
        sdf = np.minimum(sdf, dist - radius)
        covered = dist <= radius
        if covered.any():
            val = d0 + (d1 - d0) * t
            depth = np.where(covered, np.maximum(depth, val), depth)
    return depth.astype(np.float32), sdf.astype(np.float32)


def render_depth(skel: Skeleton2D, canvas_size=None, bone_radius=None, extra_chains=None):
    """Depth map: wrist 1.0 (near) ramping to 0.2 (far) at fingertips, background 0."""
    canvas_size = int(canvas_size or skel.canvas_size)
    if bone_radius is None:
        bone_radius = default_bone_radius(canvas_size)
    depth, _ = _rasterize(skel, canvas_size, bone_radius, extra_chains)
    return depth


def render_styled(skel: Skeleton2D, style: StyleParams, canvas_size=None, bone_radius=None,
                  extra_chains=None):
    """Styled RGB render; silhouette support is identical to render_depth's."""
    canvas_size = int(canvas_size or skel.canvas_size)
    if bone_radius is None:
        bone_radius = default_bone_radius(canvas_size)
    depth, sdf = _rasterize(skel, canvas_size, bone_radius, extra_chains)
    skin, outline, bg = (np.asarray(c, dtype=np.float64) for c in style.palette)
    img = _render_background(style, canvas_size)

    hand = depth > 0
    shade = np.zeros_like(depth, dtype=np.float64)
    shade[hand] = (depth[hand] - DEPTH_FAR) / (DEPTH_NEAR - DEPTH_FAR)
    skin_px = skin[None, None, :] * (0.72 + 0.28 * shade)[..., None]
    img = np.where(hand[..., None], skin_px, img)

    rim = hand & (sdf >= -style.stroke_width)
    img = np.where(rim[..., None], outline[None, None, :], img)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def _render_background(style: StyleParams, canvas_size: int) -> np.ndarray:
    rng = np.random.default_rng(child_seed(style.texture_seed, "bg", style.style_id))
    bg = np.asarray(style.palette[2], dtype=np.float64)
    h = w = canvas_size
    ys, xs = np.mgrid[0:h, 0:w]
    img = np.broadcast_to(bg, (h, w, 3)).copy()
    if style.background_kind == "gradient":
        phi = rng.uniform(0, 2 * np.pi)
        ramp = (np.cos(phi) * xs + np.sin(phi) * ys) / canvas_size
        ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-9)
        bg2 = np.clip(bg * 0.55 + 0.18, 0.0, 1.0)
        img = bg[None, None, :] * (1 - ramp[..., None]) + bg2[None, None, :] * ramp[..., None]
    elif style.background_kind == "hatch":
        phi = rng.uniform(0.3, 1.2)
        period = rng.uniform(5.0, 9.0)
        phase = rng.uniform(0, 2 * np.pi)
        stripe = np.sin(2 * np.pi * (np.cos(phi) * xs + np.sin(phi) * ys) / period + phase) > 0.35
        dark = np.clip(bg * 0.72, 0.0, 1.0)
        img = np.where(stripe[..., None], dark[None, None, :], img)
    elif style.background_kind == "noise":
        img = np.clip(img + rng.uniform(-0.06, 0.06, size=(h, w, 3)), 0.0, 1.0)
    return img


def hand_support(skel: Skeleton2D, canvas_size=None, bone_radius=None, extra_chains=None):
    """Boolean silhouette mask shared by depth and styled rendering."""
    return render_depth(skel, canvas_size, bone_radius, extra_chains) > 0
