"""Canonical-embedding encoder for real slot vectors.

Slot j lives at the evaluation point zeta^(5^j), zeta = exp(i*pi/N); the
conjugate points carry the same (real) value, so the coefficient vector is
real. Evaluation at all odd powers of zeta is one length-N FFT.
"""

import numpy as np


class SlotEncoder:
    def __init__(self, ring_dimension: int):
        n = ring_dimension
        self.n = n
        self.n_slots = n // 2
        gal = np.empty(self.n_slots, dtype=np.int64)
        g = 1
        for j in range(self.n_slots):
            gal[j] = g
            g = g * 5 % (2 * n)
        self.slot_pos = (gal - 1) // 2
        self.conj_pos = (2 * n - gal - 1) // 2
        self.twist = np.exp(1j * np.pi * np.arange(n) / n)

    def encode(self, v: np.ndarray, scale: float) -> np.ndarray:
        """Real slots -> rounded integer coefficients of m(X) * scale."""
        ev = np.zeros(self.n, dtype=np.complex128)
        ev[self.slot_pos] = v
        ev[self.conj_pos] = v
        coeffs = (np.fft.fft(ev) / self.n * np.conj(self.twist)).real
        return np.rint(coeffs * scale).astype(np.int64)

    def decode(self, coeffs: np.ndarray, scale: float) -> np.ndarray:
        ev = self.n * np.fft.ifft(np.asarray(coeffs, dtype=np.float64) * self.twist)
        return ev[self.slot_pos].real / scale
