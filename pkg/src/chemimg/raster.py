"""Rasterization of molecules into 80x80 channel images, plus serialization.

Ten schemas are supported. Std writes atomic numbers at atom pixels and 2
on bond segments; RedA and RedB are its information-reduced forms; the
four Eng schemas stack engineered channels (never more than 4); Noise,
Truth, and Scrambled are control representations. Images are float32,
row-major, channel-last, 0.5 Angstrom per pixel.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from .molgraph import BOND_ORDER_VALUE

IMAGE_SIZE = 80
RESOLUTION = 0.5
BOND_VALUE = 2.0
N_PIXELS = IMAGE_SIZE * IMAGE_SIZE

SCHEMA_CHANNELS = {
    "Std": 1, "RedA": 1, "RedB": 1,
    "EngA": 4, "EngB": 4, "EngC": 4, "EngD": 4,
    "Noise": 1, "Truth": 1, "Scrambled": 1,
}
SCHEMA_KINDS = tuple(SCHEMA_CHANNELS)
ENGINEERED = ("EngA", "EngB", "EngC", "EngD")

CIMG_MAGIC = b"CIMG"
CIMG_VERSION = 1
CIMG_DTYPE_F32 = 1
CIMG_LAYOUT_NHWC = 1


class RasterError(ValueError):
    pass


class MoleculeTooLarge(RasterError):
    """An atom maps outside the 80x80 pixel field."""


class AtomPixelCollision(RasterError):
    """Two atoms round to the same pixel; the image cannot identify both."""


class IoError(OSError):
    """Tensor or preview file could not be read or written."""


class FormatError(ValueError):
    """Tensor file violates the container contract."""


@dataclass(frozen=True)
class ChannelSchema:
    """Image schema selector with the per-kind knobs that matter.

    `seed` feeds the noise RNG (per record); `scramble_seed` fixes the
    element-value bijection for a whole dataset; `noise_density` is the
    fraction of pixels set in Noise images.
    """

    kind: str
    noise_density: float = 0.02
    seed: int = 0
    scramble_seed: int = 0

    def __post_init__(self):
        if self.kind not in SCHEMA_CHANNELS:
            raise RasterError(f"unknown schema kind {self.kind!r}")

    @property
    def channels(self) -> int:
        return SCHEMA_CHANNELS[self.kind]


def _round_half_away(v: float) -> int:
    if v >= 0:
        return int(math.floor(v + 0.5))
    return int(math.ceil(v - 0.5))


def atom_pixel(x: float, y: float) -> tuple[int, int]:
    """Map Angstrom coordinates to (column, row) pixel indices."""
    return (_round_half_away(x / RESOLUTION + IMAGE_SIZE // 2),
            _round_half_away(y / RESOLUTION + IMAGE_SIZE // 2))


def _map_atoms(mol, coords) -> list[tuple[int, int]]:
    pixels = []
    for idx, (x, y) in enumerate(np.asarray(coords, dtype=np.float64)):
        px, py = atom_pixel(float(x), float(y))
        if not (0 <= px < IMAGE_SIZE and 0 <= py < IMAGE_SIZE):
            raise MoleculeTooLarge(
                f"atom {idx} maps to pixel ({px}, {py}) outside the "
                f"{IMAGE_SIZE}x{IMAGE_SIZE} field")
        pixels.append((px, py))
    seen: dict[tuple[int, int], int] = {}
    for idx, p in enumerate(pixels):
        if p in seen:
            raise AtomPixelCollision(
                f"atoms {seen[p]} and {idx} both map to pixel {p}")
        seen[p] = idx
    return pixels


def bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Integer line from (x0, y0) to (x1, y1), inclusive of both ends."""
    points = []
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        points.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return points


def _bond_segments(mol, pixels):
    """(bond, interior pixel list) pairs; atom pixels never appear."""
    atom_set = set(pixels)
    out = []
    for bond in mol.bonds:
        x0, y0 = pixels[bond.a]
        x1, y1 = pixels[bond.b]
        interior = [p for p in bresenham(x0, y0, x1, y1)[1:-1]
                    if p not in atom_set]
        out.append((bond, interior))
    return out


def new_image(channels: int) -> np.ndarray:
    return np.zeros((IMAGE_SIZE, IMAGE_SIZE, channels), dtype=np.float32)


def rasterize(mol, coords, annotations, schema: ChannelSchema,
              label: float | None = None) -> np.ndarray:
    """Render one molecule under `schema`; see module docstring.

    `annotations` (percept.annotate_atoms output) is required for the
    engineered schemas and ignored elsewhere. `label` is required for
    Truth. Raises MoleculeTooLarge or AtomPixelCollision when the geometry
    cannot be represented.
    """
    kind = schema.kind
    if kind == "Noise":
        return make_noise_image(schema.seed, schema.noise_density)
    if kind == "Truth":
        if label is None:
            raise RasterError("Truth schema needs the record's label")
        return make_truth_image(mol, coords, label)

    pixels = _map_atoms(mol, coords)
    segments = _bond_segments(mol, pixels)
    image = new_image(SCHEMA_CHANNELS[kind])

    if kind in ENGINEERED and annotations is None:
        raise RasterError(f"{kind} schema needs atom annotations")

    if kind == "Std":
        _write_bonds(image, 0, segments, lambda bond: BOND_VALUE)
        _write_atoms(image, 0, mol, pixels, lambda a: a.atomic_number)
    elif kind == "RedA":
        _write_atoms(image, 0, mol, pixels, lambda a: 1.0)
    elif kind == "RedB":
        _write_bonds(image, 0, segments, lambda bond: BOND_VALUE)
        _write_atoms(image, 0, mol, pixels, lambda a: 1.0)
    elif kind == "Scrambled":
        mapping = scramble_map(schema.scramble_seed)
        _write_bonds(image, 0, segments, lambda bond: mapping[2])
        _write_atoms(image, 0, mol, pixels,
                     lambda a: mapping[a.atomic_number])
    elif kind in ENGINEERED:
        if kind == "EngD":
            # channel 0 carries the full Std picture, bonds included
            _write_bonds(image, 0, segments, lambda bond: BOND_VALUE)
            _write_atoms(image, 0, mol, pixels, lambda a: a.atomic_number)
            extras = ("partial_charge", "valence", "hybridization_code")
            for ch, field in enumerate(extras, start=1):
                _write_atoms(image, ch, mol, pixels,
                             lambda a, f=field: getattr(
                                 annotations[a.index], f))
        else:
            _write_atoms(image, 0, mol, pixels, lambda a: a.atomic_number)
            _write_bonds(image, 1, segments,
                         lambda bond: BOND_ORDER_VALUE[bond.order_kind])
            fields = {
                "EngA": ("partial_charge", "hybridization_code"),
                "EngB": ("partial_charge", "valence"),
                "EngC": ("valence", "hybridization_code"),
            }[kind]
            for ch, field in enumerate(fields, start=2):
                _write_atoms(image, ch, mol, pixels,
                             lambda a, f=field: getattr(
                                 annotations[a.index], f))
    else:
        raise RasterError(f"unknown schema kind {kind!r}")
    return image


def _write_atoms(image, channel, mol, pixels, value_of):
    for atom, (px, py) in zip(mol.atoms, pixels):
        image[py, px, channel] = value_of(atom)


def _write_bonds(image, channel, segments, value_of):
    for bond, interior in segments:
        v = value_of(bond)
        for px, py in interior:
            image[py, px, channel] = v


def make_noise_image(seed: int, density: float, value: float = 1.0
                     ) -> np.ndarray:
    """Uniform random speckle: round(density * 6400) distinct pixels."""
    if not 0.0 < density < 1.0:
        raise RasterError(f"noise density must be in (0, 1), got {density}")
    count = round(density * N_PIXELS)
    rng = np.random.default_rng(seed)
    flat = rng.choice(N_PIXELS, size=count, replace=False)
    image = new_image(1)
    image[flat // IMAGE_SIZE, flat % IMAGE_SIZE, 0] = value
    return image


def make_truth_image(mol, coords, label: float) -> np.ndarray:
    """Molecule support painted with the label value itself.

    Active molecules (label 1) show their full atom-and-bond silhouette;
    inactive ones are all-zero, indistinguishable from background.
    """
    if label not in (0, 1, 0.0, 1.0):
        raise RasterError(f"Truth label must be 0 or 1, got {label!r}")
    pixels = _map_atoms(mol, coords)
    segments = _bond_segments(mol, pixels)
    image = new_image(1)
    _write_bonds(image, 0, segments, lambda bond: float(label))
    _write_atoms(image, 0, mol, pixels, lambda a: float(label))
    return image


def scramble_map(seed: int) -> dict[int, float]:
    """Seeded bijection from atomic numbers 1..118 onto values in [1, 120].

    The bond marker scrambles through key 2 of the same map, so bonds stay
    consistent with (and identical to) helium within one dataset.
    """
    rng = np.random.default_rng(seed)
    values = rng.choice(np.arange(1, 121), size=118, replace=False)
    return {z: float(v) for z, v in zip(range(1, 119), values)}


def rotate_image_nn(image: np.ndarray, angle: float) -> np.ndarray:
    """Nearest-neighbor rotation about the image center.

    Opt-in fidelity mode: keeps categorical channel values intact (no
    interpolation) at the cost of pixel-level aliasing. Pixels rotated in
    from outside the frame are 0.
    """
    h, w, c = image.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rad = math.radians(angle)
    cos, sin = math.cos(rad), math.sin(rad)
    yy, xx = np.mgrid[0:h, 0:w]
    # inverse map: target pixel -> source pixel
    sx = cos * (xx - cx) + sin * (yy - cy) + cx
    sy = -sin * (xx - cx) + cos * (yy - cy) + cy
    sxi = np.rint(sx).astype(np.int64)
    syi = np.rint(sy).astype(np.int64)
    valid = (0 <= sxi) & (sxi < w) & (0 <= syi) & (syi < h)
    out = np.zeros_like(image)
    out[yy[valid], xx[valid]] = image[syi[valid], sxi[valid]]
    return out


def write_tensor_file(images: list[np.ndarray], path) -> None:
    """Serialize images to the CIMG container (see read_tensor_file)."""
    if images:
        shape = images[0].shape
        for img in images:
            if img.shape != shape:
                raise FormatError(
                    f"image shapes differ: {img.shape} vs {shape}")
        h, w, c = shape
        n = len(images)
        payload = np.stack(images).astype("<f4", copy=False)
    else:
        n = h = w = c = 0
        payload = np.zeros((0,), dtype="<f4")
    header = CIMG_MAGIC + struct.pack(
        "<BBBBIIIII", CIMG_VERSION, CIMG_DTYPE_F32, CIMG_LAYOUT_NHWC, 0,
        4, n, h, w, c)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write tensor file {path}: {exc}") from exc


def read_tensor_file(path) -> list[np.ndarray]:
    """Read a CIMG container back into a list of (H, W, C) float32 arrays.

    Layout: magic "CIMG", u8 version=1, u8 dtype=1 (f32 LE), u8 layout=1
    (NHWC row-major), u8 pad=0, u32 rank=4, 4x u32 dims, then the payload.
    Round-trips bit-exactly.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read tensor file {path}: {exc}") from exc

    if len(raw) < 28:
        raise FormatError("file shorter than the fixed header")
    if raw[:4] != CIMG_MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}")
    version, dtype, layout, pad, rank = struct.unpack("<BBBBI", raw[4:12])
    if version != CIMG_VERSION:
        raise FormatError(f"unsupported version {version}")
    if dtype != CIMG_DTYPE_F32:
        raise FormatError(f"unsupported dtype code {dtype}")
    if layout != CIMG_LAYOUT_NHWC:
        raise FormatError(f"unsupported layout code {layout}")
    if rank != 4:
        raise FormatError(f"expected rank 4, got {rank}")
    n, h, w, c = struct.unpack("<IIII", raw[12:28])
    expected = n * h * w * c * 4
    body = raw[28:]
    if len(body) != expected:
        raise FormatError(
            f"payload is {len(body)} bytes, dims require {expected}")
    if n == 0:
        return []
    tensor = np.frombuffer(body, dtype="<f4").reshape(n, h, w, c)
    return [tensor[i].copy() for i in range(n)]


def export_png_preview(image: np.ndarray, path, channel: int = 0) -> None:
    """Write one channel as an 8-bit grayscale PNG, min-max normalized."""
    if channel >= image.shape[2]:
        raise RasterError(
            f"channel {channel} out of range for {image.shape[2]}-channel "
            f"image")
    plane = image[:, :, channel].astype(np.float64)
    lo, hi = float(plane.min()), float(plane.max())
    if hi > lo:
        scaled = np.round((plane - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(plane)
    try:
        PILImage.fromarray(scaled.astype(np.uint8), mode="L").save(path)
    except OSError as exc:
        raise IoError(f"cannot write preview {path}: {exc}") from exc
