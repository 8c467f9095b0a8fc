"""Face image ingestion: binary PGM I/O, ORL directory loading, canonical
48x48 resizing and a seeded synthetic dataset generator."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

CANONICAL_SIZE = 48
N_PIXELS = CANONICAL_SIZE * CANONICAL_SIZE
ORL_IMAGES_PER_SUBJECT = 10

_WHITESPACE = b" \t\n\r\x0b\x0c"


class PgmParseError(ValueError):
    """Base class for malformed PGM input. ``offset`` is the byte position
    at which parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class PgmMagicError(PgmParseError):
    pass


class PgmHeaderError(PgmParseError):
    pass


class PgmMaxvalError(PgmParseError):
    pass


class PgmTruncatedError(PgmParseError):
    pass


class DatasetError(Exception):
    """Raised when a face dataset on disk is missing, incomplete or corrupt."""


@dataclass(frozen=True, eq=False)
class FaceImage:
    """A canonical 48x48 gray-level face with real-valued pixels in [0, 255]."""

    pixels: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.shape != (CANONICAL_SIZE, CANONICAL_SIZE):
            raise ValueError(
                f"FaceImage must be {CANONICAL_SIZE}x{CANONICAL_SIZE}, got {pixels.shape}"
            )
        if not np.all(np.isfinite(pixels)) or pixels.min() < 0 or pixels.max() > 255:
            raise ValueError("FaceImage pixels must lie in [0, 255]")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)


@dataclass(frozen=True, eq=False)
class LabeledImage:
    image: FaceImage
    label: int
    index: int = 1  # 1-based image number within the subject

    def __post_init__(self):
        if int(self.label) != self.label or self.label < 1:
            raise ValueError(f"label must be a positive integer, got {self.label!r}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable, deterministically ordered collection of labelled faces."""

    items: tuple[LabeledImage, ...] = field(default_factory=tuple)

    def __post_init__(self):
        items = sorted(self.items, key=lambda it: (it.label, it.index))
        object.__setattr__(self, "items", tuple(items))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[LabeledImage]:
        return iter(self.items)

    @property
    def class_count(self) -> int:
        return len(self.subjects)

    @property
    def subjects(self) -> list[int]:
        return sorted({it.label for it in self.items})

    @property
    def labels(self) -> np.ndarray:
        return np.array([it.label for it in self.items], dtype=np.int64)

    @property
    def indices(self) -> np.ndarray:
        return np.array([it.index for it in self.items], dtype=np.int64)

    def images(self) -> np.ndarray:
        """Stack of pixel matrices, shape (n, 48, 48)."""
        if not self.items:
            return np.empty((0, CANONICAL_SIZE, CANONICAL_SIZE))
        return np.stack([it.image.pixels for it in self.items])

    def matrix(self) -> np.ndarray:
        """The n x 2304 matrix of flattened images."""
        return self.images().reshape(len(self.items), N_PIXELS)

    def subset(self, predicate) -> "Dataset":
        return Dataset(tuple(it for it in self.items if predicate(it)))


# --------------------------------------------------------------------------
# PGM


def _skip_space_and_comments(data: bytes, pos: int) -> int:
    n = len(data)
    while pos < n:
        if data[pos] in _WHITESPACE:
            pos += 1
        elif data[pos] == 0x23:  # '#'
            while pos < n and data[pos] not in (0x0A, 0x0D):
                pos += 1
        else:
            break
    return pos


def _read_int(data: bytes, pos: int, name: str) -> tuple[int, int]:
    pos = _skip_space_and_comments(data, pos)
    start = pos
    while pos < len(data) and data[pos] not in _WHITESPACE and data[pos] != 0x23:
        pos += 1
    token = data[start:pos]
    if not token:
        raise PgmHeaderError(f"missing {name} field", start)
    if not token.isdigit():
        raise PgmHeaderError(f"non-numeric {name} field {token[:16]!r}", start)
    return int(token), pos


def parse_pgm(data: bytes, return_maxval: bool = False):
    """Decode a binary (P5) PGM byte string into a ``height x width`` uint8 array.

    Header comments starting with ``#`` are skipped. Bytes following the
    ``width * height`` payload are ignored.
    """
    data = bytes(data)
    if data[:2] != b"P5":
        raise PgmMagicError(f"bad magic {data[:2]!r}, expected b'P5'", 0)
    pos = 2
    if pos >= len(data) or (data[pos] not in _WHITESPACE and data[pos] != 0x23):
        raise PgmMagicError("magic must be followed by whitespace", pos)
    width, pos = _read_int(data, pos, "width")
    height, pos = _read_int(data, pos, "height")
    maxval_pos = _skip_space_and_comments(data, pos)
    maxval, pos = _read_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PgmHeaderError(f"invalid dimensions {width}x{height}", maxval_pos)
    if maxval < 1 or maxval > 255:
        raise PgmMaxvalError(f"maxval {maxval} outside 1..255", maxval_pos)
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise PgmTruncatedError("missing whitespace before payload", pos)
    pos += 1
    size = width * height
    if len(data) - pos < size:
        raise PgmTruncatedError(
            f"payload has {len(data) - pos} bytes, expected {size}", len(data)
        )
    pixels = np.frombuffer(data, dtype=np.uint8, count=size, offset=pos)
    pixels = pixels.reshape(height, width).copy()
    if pixels.max(initial=0) > maxval:
        raise PgmMaxvalError("pixel value exceeds maxval", pos + int(np.argmax(pixels.ravel() > maxval)))
    if return_maxval:
        return pixels, maxval
    return pixels


def serialize_pgm(pixels, maxval: int = 255) -> bytes:
    """Encode an integer-valued matrix as binary PGM with a minimal header."""
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise ValueError("PGM payload must be a 2-D matrix")
    if not 1 <= maxval <= 255:
        raise ValueError("maxval must be in 1..255")
    if arr.size and (arr.min() < 0 or arr.max() > maxval or np.any(arr != np.round(arr))):
        raise ValueError(f"pixel values must be integers in 0..{maxval}")
    height, width = arr.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    return header + arr.astype(np.uint8).tobytes()


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def write_pgm(path, pixels) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_pgm(pixels))


# --------------------------------------------------------------------------
# canonicalisation


def resize_bilinear(src, size: int = CANONICAL_SIZE) -> np.ndarray:
    """Bilinear resize with corner-aligned sampling.

    Output row ``r`` samples source row ``r * (H - 1) / (size - 1)`` (columns
    likewise), so the four corners map exactly onto the source corners.
    """
    src = np.asarray(src, dtype=np.float64)
    if src.ndim != 2 or src.shape[0] < 2 or src.shape[1] < 2:
        raise ValueError(f"source must be at least 2x2, got shape {src.shape}")
    h, w = src.shape

    def axis(n_src):
        coords = np.arange(size) * (n_src - 1) / (size - 1)
        lo = np.minimum(np.floor(coords).astype(np.int64), n_src - 1)
        hi = np.minimum(lo + 1, n_src - 1)
        return lo, hi, coords - lo

    r0, r1, fr = axis(h)
    c0, c1, fc = axis(w)
    top = src[r0][:, c0] + (src[r0][:, c1] - src[r0][:, c0]) * fc
    bottom = src[r1][:, c0] + (src[r1][:, c1] - src[r1][:, c0]) * fc
    out = top + (bottom - top) * fr[:, None]
    return np.clip(out, 0.0, 255.0)


def flatten(img: FaceImage) -> np.ndarray:
    """Row-major 2304-vector; element ``48*r + c`` is pixel ``(r, c)``."""
    return np.asarray(img.pixels).reshape(N_PIXELS).copy()


def unflatten(vec, source_id: str = "") -> FaceImage:
    return FaceImage(np.asarray(vec, dtype=np.float64).reshape(CANONICAL_SIZE, CANONICAL_SIZE), source_id)


def canonicalize(pixels, source_id: str = "") -> FaceImage:
    return FaceImage(resize_bilinear(pixels), source_id)


# --------------------------------------------------------------------------
# ORL layout

_SUBJECT_DIR = re.compile(r"^s(\d+)$")


def load_orl_dataset(root, images_per_subject: int = ORL_IMAGES_PER_SUBJECT) -> Dataset:
    """Load an ``s<k>/<i>.pgm`` tree. Subjects may be missing; images within a
    present subject may not."""
    root = Path(root)
    try:
        entries = sorted(os.listdir(root))
    except OSError as exc:
        raise DatasetError(f"cannot read dataset directory {root}: {exc}") from exc

    subjects = []
    for name in entries:
        m = _SUBJECT_DIR.match(name)
        if m and (root / name).is_dir() and int(m.group(1)) >= 1:
            subjects.append((int(m.group(1)), root / name))
    if not subjects:
        raise DatasetError(f"no subjects found in {root}")
    subjects.sort()

    items = []
    for label, subject_dir in subjects:
        missing = [
            i for i in range(1, images_per_subject + 1) if not (subject_dir / f"{i}.pgm").is_file()
        ]
        if missing:
            raise DatasetError(
                f"{subject_dir}: expected images 1..{images_per_subject}.pgm, missing {missing}"
            )
        for i in range(1, images_per_subject + 1):
            path = subject_dir / f"{i}.pgm"
            try:
                raw = read_pgm(path)
            except PgmParseError as exc:
                raise DatasetError(f"{path}: {exc}") from exc
            except OSError as exc:
                raise DatasetError(f"{path}: {exc}") from exc
            try:
                face = canonicalize(raw, str(path))
            except ValueError as exc:
                raise DatasetError(f"{path}: {exc}") from exc
            items.append(LabeledImage(face, label, i))
    return Dataset(tuple(items))


def write_dataset(ds: Dataset, root) -> None:
    """Write ``ds`` as an ORL-style PGM tree, rounding pixels to 8 bits."""
    root = Path(root)
    for it in ds:
        subject_dir = root / f"s{it.label}"
        subject_dir.mkdir(parents=True, exist_ok=True)
        pixels = np.clip(np.rint(it.image.pixels), 0, 255).astype(np.uint8)
        write_pgm(subject_dir / f"{it.index}.pgm", pixels)


# --------------------------------------------------------------------------
# synthetic faces


def synthesize_dataset(n_classes: int, images_per_class: int, seed: int = 0) -> Dataset:
    """Seeded stand-in for ORL: each class is a distinct mixture of low
    frequency cosines, each image adds small Gaussian noise and a slight
    brightness offset."""
    if n_classes < 2 or images_per_class < 2:
        raise ValueError("need n_classes >= 2 and images_per_class >= 2")
    rng = np.random.default_rng(seed)
    grid = np.arange(CANONICAL_SIZE) / CANONICAL_SIZE
    yy, xx = np.meshgrid(grid, grid, indexing="ij")

    items = []
    for label in range(1, n_classes + 1):
        base = np.full((CANONICAL_SIZE, CANONICAL_SIZE), 128.0)
        for _ in range(3):
            fy, fx = rng.integers(0, 4, size=2)
            amp = rng.uniform(20.0, 40.0)
            phase = rng.uniform(0.0, 2 * np.pi)
            base += amp * np.cos(2 * np.pi * (fy * yy + fx * xx) + phase)
        for index in range(1, images_per_class + 1):
            noisy = base + rng.normal(0.0, 4.0, base.shape) + rng.uniform(-3.0, 3.0)
            face = FaceImage(np.clip(noisy, 0.0, 255.0), f"synthetic:{seed}/s{label}/{index}")
            items.append(LabeledImage(face, label, index))
    return Dataset(tuple(items))


def as_image_batch(images: Sequence) -> np.ndarray:
    """Coerce FaceImages, 48x48 matrices or 2304-vectors into an (n, 48, 48) array."""
    if isinstance(images, Dataset):
        return images.images()
    if isinstance(images, np.ndarray):
        arr = images.astype(np.float64, copy=False)
    else:
        arr = np.stack(
            [np.asarray(im.pixels if isinstance(im, FaceImage) else im, dtype=np.float64) for im in images]
        ) if len(images) else np.empty((0, CANONICAL_SIZE, CANONICAL_SIZE))
    if arr.ndim == 2 and arr.shape[1] == N_PIXELS:
        arr = arr.reshape(-1, CANONICAL_SIZE, CANONICAL_SIZE)
    if arr.ndim != 3 or arr.shape[1:] != (CANONICAL_SIZE, CANONICAL_SIZE):
        raise ValueError(
            f"expected images of shape (n, 48, 48) or (n, 2304), got {arr.shape}"
        )
    return arr
