"""Binary image datasets: IDX, Semeion text and binary CSV loaders, splitting."""

import csv
import gzip
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DataFormatError

IDX_IMAGES_MAGIC = 0x00000803
DEFAULT_THRESHOLD = 127


@dataclass
class BinaryDataset:
    images: np.ndarray
    width: int
    height: int
    name: str = ""

    def __post_init__(self):
        self.images = np.asarray(self.images)
        if self.images.ndim != 2 or self.images.shape[1] != self.width * self.height:
            raise ContractError(
                f"images of shape {self.images.shape} do not match {self.width}x{self.height}"
            )
        if not np.all((self.images == 0) | (self.images == 1)):
            raise ContractError("dataset images must be binary")
        self.images = self.images.astype(np.uint8)

    def __len__(self):
        return self.images.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    def subset(self, indices, name=None) -> "BinaryDataset":
        return BinaryDataset(self.images[np.asarray(indices, dtype=int)], self.width, self.height,
                             self.name if name is None else name)


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def parse_idx_images(raw: bytes, threshold: int = DEFAULT_THRESHOLD, name: str = "idx") -> BinaryDataset:
    if len(raw) < 16:
        raise DataFormatError(f"IDX header truncated: {len(raw)} bytes, need 16 (offset {len(raw)})")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise DataFormatError(f"bad IDX magic 0x{magic:08x} at offset 0, expected 0x{IDX_IMAGES_MAGIC:08x}")
    if count == 0:
        raise DataFormatError("IDX file holds no images (count 0 at offset 4)")
    expected = count * rows * cols
    payload = len(raw) - 16
    if payload < expected:
        raise DataFormatError(
            f"IDX payload truncated at offset {len(raw)}: expected {expected} pixel bytes, found {payload}"
        )
    pixels = np.frombuffer(raw, dtype=np.uint8, count=expected, offset=16).reshape(count, rows * cols)
    return BinaryDataset((pixels > threshold).astype(np.uint8), cols, rows, name)


def load_idx(path, threshold: int = DEFAULT_THRESHOLD) -> BinaryDataset:
    """Load an IDX image file (optionally gzip-compressed), binarising pixels > threshold."""
    return parse_idx_images(_read_bytes(path), threshold, name=str(path))


def write_idx(path, pixels, rows: int, cols: int) -> None:
    pixels = np.asarray(pixels, dtype=np.uint8).reshape(-1, rows * cols)
    blob = struct.pack(">IIII", IDX_IMAGES_MAGIC, pixels.shape[0], rows, cols) + pixels.tobytes()
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(blob)


def load_semeion(path) -> BinaryDataset:
    """Semeion digits: 256 pixel fields plus a 10-field one-hot label per line."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 266:
                raise DataFormatError(f"line {lineno}: expected 266 fields, found {len(fields)}")
            try:
                values = [float(v) for v in fields[:256]]
            except ValueError as exc:
                raise DataFormatError(f"line {lineno}: {exc}") from None
            if any(v not in (0.0, 1.0) for v in values):
                raise DataFormatError(f"line {lineno}: pixel values must be 0 or 1")
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no images found")
    return BinaryDataset(np.array(rows, dtype=np.uint8), 16, 16, str(path))


def load_csv_binary(path, width: int, height: int) -> BinaryDataset:
    rows = []
    n_pixels = width * height
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != n_pixels:
                raise DataFormatError(f"row {lineno}: expected {n_pixels} values, found {len(record)}")
            row = []
            for col, cell in enumerate(record, start=1):
                cell = cell.strip()
                if cell not in ("0", "1"):
                    raise DataFormatError(f"row {lineno}, column {col}: non-binary value {cell!r}")
                row.append(int(cell))
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no images found")
    return BinaryDataset(np.array(rows, dtype=np.uint8), width, height, str(path))


def write_csv_binary(ds: BinaryDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(ds.images.tolist())


def load_dataset(path, fmt: str, width: int = 28, height: int = 28,
                 threshold: int = DEFAULT_THRESHOLD) -> BinaryDataset:
    fmt = fmt.lower()
    if fmt == "idx":
        return load_idx(path, threshold)
    if fmt == "semeion":
        return load_semeion(path)
    if fmt == "csv":
        return load_csv_binary(path, width, height)
    raise ContractError(f"unknown dataset format {fmt!r}; use idx, semeion or csv")


def split_train_test(ds: BinaryDataset, train_fraction: float, rng: np.random.Generator):
    if not 0.0 < train_fraction < 1.0:
        raise ContractError("train_fraction must lie strictly between 0 and 1")
    n = len(ds)
    n_train = math.ceil(train_fraction * n - 1e-9)
    if n_train < 1 or n_train >= n:
        raise ContractError(f"fraction {train_fraction} of {n} images leaves one side empty")
    order = rng.permutation(n)
    return ds.subset(order[:n_train], f"{ds.name}[train]"), ds.subset(order[n_train:], f"{ds.name}[test]")


def subsample(ds: BinaryDataset, count: int, rng: np.random.Generator) -> BinaryDataset:
    if count < 1:
        raise ContractError("subsample count must be >= 1")
    if count > len(ds):
        raise ContractError(f"cannot draw {count} images from {len(ds)}")
    return ds.subset(rng.choice(len(ds), size=count, replace=False))
