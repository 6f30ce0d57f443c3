import numpy as np
from dataclasses import dataclass
from typing import Optional

from ..errors import InvalidArgumentError
from ..transform import dct_basis


@dataclass(frozen=True)
class MeasurementOperator:
    """Sensing matrix relating DCT coefficients to retained samples.

    ``theta`` holds rows ``retained_indices`` of the IDCT basis, so
    ``theta @ dct_forward(x) == x[retained_indices]``. The row selector is kept
    implicitly as the index list.

    With ``column_scale`` set, ``theta`` has been divided column-wise by those
    norms; a solution ``beta`` of the scaled system maps back to coefficients
    as ``beta / column_scale``.
    """

    n: int
    retained_indices: np.ndarray
    theta: np.ndarray
    column_scale: Optional[np.ndarray] = None

    @property
    def m(self):
        return int(self.retained_indices.size)

    @property
    def orthonormal_rows(self):
        # Rows of an orthonormal matrix stay orthonormal under row selection.
        return self.column_scale is None

    def to_coefficients(self, beta):
        if self.column_scale is None:
            return beta
        return beta / self.column_scale


def build_measurement_operator(n, retained_indices, normalize_columns=False):
    n = int(n)
    if n < 1:
        raise InvalidArgumentError(f"block length must be >= 1, got {n}")
    idx = np.asarray(retained_indices, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise InvalidArgumentError(f"retained indices must lie in [0, {n})")
    if np.unique(idx).size != idx.size:
        raise InvalidArgumentError("retained indices contain duplicates")
    theta = dct_basis(n)[idx]
    scale = None
    if normalize_columns:
        scale = np.linalg.norm(theta, axis=0)
        # A column can vanish when every kept row hits a cosine zero; leave it unscaled.
        scale[scale == 0] = 1.0
        theta = theta / scale
    return MeasurementOperator(n, idx, theta, scale)
