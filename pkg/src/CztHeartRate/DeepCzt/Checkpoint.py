# ----------------------------------------------------------------------
# |
# |  Checkpoint.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-06 15:30:48
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""\
Binary checkpoints for the trainable estimator.

Layout (little-endian):

    "DCZT"                      4 bytes
    version                     u32
    M, N                        u32, u32
    f_start, f_end, fs          f64, f64, f64
    w_tilde                     M * 2N f64, row-major
    w_tilde_init                M * 2N f64, row-major
    CRC32 of all prior bytes    u32

A plan that starts at 0 Hz walks the entire unit circle (the DFT contour); zoom plans always
start above 0 Hz.
"""

import struct
import zlib

from pathlib import Path
from typing import Optional

import numpy as np

from CztHeartRate.Czt import CztException, CztPlan
from CztHeartRate.DeepCzt.Model import DeepCztException, DeepCztModel


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
MAGIC = b"DCZT"
VERSION = 1

_HEADER = struct.Struct("<4sIIIddd")
_CRC = struct.Struct("<I")

# Maximum deviation between the stored initialization and the plan rebuilt from the header
INIT_TOLERANCE = 1e-9


# ----------------------------------------------------------------------
class CheckpointException(DeepCztException):
    """Exception raised when a checkpoint cannot be read."""

    pass  # pylint: disable=unnecessary-pass


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def SaveCheckpoint(
    model: DeepCztModel,
) -> bytes:
    plan = model.plan

    content = b"".join(
        [
            _HEADER.pack(
                MAGIC,
                VERSION,
                plan.m_bins,
                plan.n_input,
                plan.f_start_hz,
                plan.f_end_hz,
                plan.sample_rate_hz,
            ),
            np.ascontiguousarray(model.w_tilde, dtype="<f8").tobytes(order="C"),
            np.ascontiguousarray(model.w_tilde_init, dtype="<f8").tobytes(order="C"),
        ],
    )

    return content + _CRC.pack(zlib.crc32(content))


# ----------------------------------------------------------------------
def LoadCheckpoint(
    content: bytes,
    *,
    expected_n_input: Optional[int] = None,
) -> DeepCztModel:
    """Restores a model; `expected_n_input` verifies the window length of the consuming pipeline."""

    if len(content) < _HEADER.size:
        raise CheckpointException("unexpected end of checkpoint (header)")

    magic, version, m_bins, n_input, f_start_hz, f_end_hz, sample_rate_hz = _HEADER.unpack_from(content)

    if magic != MAGIC:
        raise CheckpointException("The content is not a checkpoint (magic {!r}).".format(magic))

    if version != VERSION:
        raise CheckpointException(
            "Checkpoint version {} is not supported (expected {}).".format(version, VERSION)
        )

    num_values = m_bins * 2 * n_input
    matrix_size = num_values * 8

    expected_size = _HEADER.size + 2 * matrix_size + _CRC.size

    if len(content) < expected_size:
        raise CheckpointException(
            "unexpected end of checkpoint ({} of {} bytes)".format(len(content), expected_size)
        )
    if len(content) > expected_size:
        raise CheckpointException(
            "The checkpoint has {} trailing bytes.".format(len(content) - expected_size)
        )

    (crc,) = _CRC.unpack_from(content, expected_size - _CRC.size)
    if crc != zlib.crc32(content[: expected_size - _CRC.size]):
        raise CheckpointException("The checkpoint CRC does not match its content.")

    if expected_n_input is not None and n_input != expected_n_input:
        raise CheckpointException(
            "The checkpoint was trained on {}-sample windows but the pipeline uses {}-sample windows.".format(
                n_input,
                expected_n_input,
            ),
        )

    plan = _RebuildPlan(n_input, m_bins, f_start_hz, f_end_hz, sample_rate_hz)

    offset = _HEADER.size
    shape = (m_bins, 2 * n_input)

    w_tilde = np.frombuffer(content, dtype="<f8", count=num_values, offset=offset).reshape(shape)
    w_tilde_init = np.frombuffer(
        content,
        dtype="<f8",
        count=num_values,
        offset=offset + matrix_size,
    ).reshape(shape)

    if not np.allclose(w_tilde_init, np.hstack([plan.w_re, plan.w_im]), rtol=0.0, atol=INIT_TOLERANCE):
        raise CheckpointException(
            "The initial weights do not match the classical transform of the checkpoint plan."
        )

    return DeepCztModel(plan, w_tilde.astype(np.float64), w_tilde_init.astype(np.float64))


# ----------------------------------------------------------------------
def WriteCheckpoint(
    path: Path,
    model: DeepCztModel,
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(SaveCheckpoint(model))


# ----------------------------------------------------------------------
def ReadCheckpoint(
    path: Path,
    *,
    expected_n_input: Optional[int] = None,
) -> DeepCztModel:
    if not path.is_file():
        raise CheckpointException("The checkpoint '{}' does not exist.".format(path))

    return LoadCheckpoint(path.read_bytes(), expected_n_input=expected_n_input)


# ----------------------------------------------------------------------
# |
# |  Private Functions
# |
# ----------------------------------------------------------------------
def _RebuildPlan(
    n_input: int,
    m_bins: int,
    f_start_hz: float,
    f_end_hz: float,
    sample_rate_hz: float,
) -> CztPlan:
    try:
        if f_start_hz == 0.0:
            plan = CztPlan.CreateDft(n_input, sample_rate_hz)

            if plan.m_bins != m_bins or plan.f_end_hz != f_end_hz:
                raise CheckpointException(
                    "The checkpoint plan is invalid: a full-circle plan requires {} bins ending at {} Hz ({}, {}).".format(
                        plan.m_bins,
                        plan.f_end_hz,
                        m_bins,
                        f_end_hz,
                    ),
                )

            return plan

        return CztPlan(n_input, m_bins, f_start_hz, f_end_hz, sample_rate_hz)

    except CztException as ex:
        raise CheckpointException("The checkpoint plan is invalid: {}".format(ex)) from ex
