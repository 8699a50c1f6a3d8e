"""Image containers, phase/complex conversions and the ``.rst`` raster format.

Rasters are stored as float32 ``(height, width, channels)`` arrays. The
single-look complex (SLC) and interferogram containers hold plain 2-D float32
planes, which is what every numeric routine in the package consumes.

File layout of a ``.rst`` file (all integers little-endian)::

    b"RSTR" | u32 header length L | L bytes of UTF-8 JSON | W*H*C binary32 values
"""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Raster",
    "SlcImage",
    "Interferogram",
    "RasterFormatError",
    "BadMagicError",
    "TruncatedPayloadError",
    "LengthMismatchError",
    "wrap_phase",
    "phase_to_complex",
    "reconstruct_phase",
    "form_interferogram",
    "read_raster",
    "write_raster",
]

MAGIC = b"RSTR"
TWO_PI = 2.0 * np.pi
# float32(pi) rounds above pi, so the float32 half-open interval ends here.
PI_F32 = np.float32(np.pi)


class RasterFormatError(ValueError):
    """Raised when a ``.rst`` file cannot be decoded."""


class BadMagicError(RasterFormatError):
    pass


class TruncatedPayloadError(RasterFormatError):
    pass


class LengthMismatchError(RasterFormatError):
    """Payload is longer than the header declares."""


@dataclass(frozen=True, eq=False)
class Raster:
    """A ``height x width x channels`` grid of float32 values.

    The wrapped array is a read-only copy, so instances behave as values.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"raster data must be 2-D or 3-D, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"raster dimensions must be >= 1, got {arr.shape}")
        arr = np.array(arr, dtype="<f4", copy=True, order="C")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def plane(self, channel: int = 0) -> np.ndarray:
        return self.data[:, :, channel]

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        # Bitwise comparison so NaN payloads compare equal to themselves.
        return self.data.shape == other.data.shape and np.array_equal(
            self.data.view(np.uint32), other.data.view(np.uint32)
        )

    def __repr__(self):
        return f"Raster(width={self.width}, height={self.height}, channels={self.channels})"


def _plane(values, name: str) -> np.ndarray:
    arr = np.asarray(values.data if isinstance(values, Raster) else values)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a single-channel 2-D image, got shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.float32)


@dataclass(frozen=True, eq=False)
class SlcImage:
    """One single-look complex acquisition as amplitude and phase planes."""

    amplitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        amp = _plane(self.amplitude, "amplitude")
        phase = _plane(self.phase, "phase")
        if amp.shape != phase.shape:
            raise ValueError(f"amplitude shape {amp.shape} != phase shape {phase.shape}")
        if np.any(amp < 0):
            raise ValueError("SLC amplitude must be nonnegative")
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "phase", phase)

    @property
    def shape(self) -> tuple[int, int]:
        return self.amplitude.shape

    def to_complex(self) -> np.ndarray:
        return self.amplitude.astype(np.float64) * np.exp(1j * self.phase.astype(np.float64))

    @classmethod
    def from_complex(cls, z) -> "SlcImage":
        z = np.asarray(z)
        return cls(np.abs(z), reconstruct_phase(z.real, z.imag))


@dataclass(frozen=True, eq=False)
class Interferogram:
    """Complex product image: amplitude ``A1*A2`` and wrapped phase ``phi2 - phi1``."""

    amplitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        amp = _plane(self.amplitude, "amplitude")
        phase = _plane(self.phase, "phase")
        if amp.shape != phase.shape:
            raise ValueError(f"amplitude shape {amp.shape} != phase shape {phase.shape}")
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "phase", phase)

    @property
    def shape(self) -> tuple[int, int]:
        return self.amplitude.shape


def wrap_phase(x):
    """Wrap angles into the half-open interval ``[-pi, pi)``.

    ``pi`` itself maps to ``-pi``. float32 input gives float32 output that is
    strictly below ``float32(pi)``.
    """
    arr = np.asarray(x)
    out = np.mod(arr.astype(np.float64) + np.pi, TWO_PI) - np.pi
    if arr.dtype == np.float32:
        out = out.astype(np.float32)
        out[out >= PI_F32] = -PI_F32
    elif np.ndim(out):
        out[out >= np.pi] = -np.pi
    elif out >= np.pi:
        out = np.float64(-np.pi)
    return out if np.ndim(out) else out[()]


def phase_to_complex(phase):
    """Return the unit phasor ``(cos(phase), sin(phase))`` as float32 planes."""
    p = np.asarray(phase.data if isinstance(phase, Raster) else phase, dtype=np.float64)
    return np.cos(p).astype(np.float32), np.sin(p).astype(np.float32)


def reconstruct_phase(real, imag):
    """Phase of ``real + i*imag`` in ``[-pi, pi)``; a zero phasor maps to 0."""
    re = np.asarray(real, dtype=np.float64)
    im = np.asarray(imag, dtype=np.float64)
    if re.shape != im.shape:
        raise ValueError(f"real shape {re.shape} != imag shape {im.shape}")
    out = np.arctan2(im, re)
    out = np.where((re == 0) & (im == 0), 0.0, out)
    dtype = np.result_type(np.asarray(real).dtype, np.asarray(imag).dtype, np.float32)
    return wrap_phase(out.astype(dtype) if dtype == np.float32 else out)


def form_interferogram(s1: SlcImage, s2: SlcImage) -> Interferogram:
    """Interferogram of two co-registered SLCs: ``A1*A2 * exp(i(phi2 - phi1))``."""
    if s1.shape != s2.shape:
        raise ValueError(f"SLC shapes differ: s1 {s1.shape} vs s2 {s2.shape}")
    amp = s1.amplitude.astype(np.float64) * s2.amplitude
    dphi = wrap_phase(s2.phase.astype(np.float64) - s1.phase.astype(np.float64))
    return Interferogram(amp.astype(np.float32), wrap_phase(dphi.astype(np.float32)))


def _header(raster: Raster) -> bytes:
    meta = {
        "width": raster.width,
        "height": raster.height,
        "channels": raster.channels,
        "dtype": "f32",
        "layout": "row-major-channel-last",
    }
    return json.dumps(meta, separators=(",", ":")).encode("utf-8")


def write_raster(raster, path) -> None:
    """Write ``raster`` (a :class:`Raster` or array) to ``path`` in ``.rst`` format."""
    if not isinstance(raster, Raster):
        raster = Raster(raster)
    header = _header(raster)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(raster.data.tobytes(order="C"))


def read_raster(path) -> Raster:
    with open(path, "rb") as fh:
        blob = fh.read()
    return decode_raster(blob, source=os.fspath(path))


def decode_raster(blob: bytes, source: str = "<bytes>") -> Raster:
    if len(blob) < 8:
        if blob[:4] != MAGIC[: len(blob[:4])]:
            raise BadMagicError(f"{source}: bad magic")
        raise TruncatedPayloadError(f"{source}: truncated header")
    if blob[:4] != MAGIC:
        raise BadMagicError(f"{source}: bad magic {blob[:4]!r}")
    (hlen,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + hlen:
        raise TruncatedPayloadError(f"{source}: truncated header ({len(blob) - 8} of {hlen} bytes)")
    try:
        meta = json.loads(blob[8 : 8 + hlen].decode("utf-8"))
        w, h, c = int(meta["width"]), int(meta["height"]), int(meta["channels"])
    except (ValueError, KeyError, TypeError) as exc:
        raise RasterFormatError(f"{source}: invalid header: {exc}") from exc
    if meta.get("dtype") != "f32" or meta.get("layout") != "row-major-channel-last":
        raise RasterFormatError(f"{source}: unsupported dtype/layout {meta!r}")
    if min(w, h, c) < 1:
        raise RasterFormatError(f"{source}: non-positive dimensions {w}x{h}x{c}")
    expected = 4 * w * h * c
    payload = blob[8 + hlen :]
    if len(payload) < expected:
        raise TruncatedPayloadError(f"{source}: truncated payload ({len(payload)} of {expected} bytes)")
    if len(payload) > expected:
        raise LengthMismatchError(
            f"{source}: header declares {expected} payload bytes but file holds {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    return Raster(data)
