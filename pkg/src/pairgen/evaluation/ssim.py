"""Structural similarity on single-channel maps."""
import numpy as np
import torch
import torch.nn.functional as F

WINDOW = 11
SIGMA = 1.5
K1, K2 = 0.01, 0.03


def gaussian_window(size: int = WINDOW, sigma: float = SIGMA) -> torch.Tensor:
    """Normalized size x size Gaussian kernel, float64."""
    x = torch.arange(size, dtype=torch.float64) - (size - 1) / 2
    g = torch.exp(-(x**2) / (2 * sigma**2))
    g = g / g.sum()
    return torch.outer(g, g)


def ssim_maps(a, b, data_range: float) -> torch.Tensor:
    """Per-map SSIM of two N x H x W batches, averaged over valid window positions.

    Raises:
        ValueError: When the shapes differ, the maps are smaller than the window,
        or data_range is not positive.
    """
    a = torch.as_tensor(np.asarray(a), dtype=torch.float64)
    b = torch.as_tensor(np.asarray(b), dtype=torch.float64)
    if a.shape != b.shape:
        raise ValueError(f"ssim shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    if data_range <= 0:
        raise ValueError(f"data_range must be positive, got {data_range}")
    if a.dim() == 2:
        a, b = a[None], b[None]
    if min(a.shape[-2:]) < WINDOW:
        raise ValueError(f"maps must be at least {WINDOW}x{WINDOW}, got {tuple(a.shape[-2:])}")

    w = gaussian_window()[None, None]
    a, b = a[:, None], b[:, None]
    c1, c2 = (K1 * data_range) ** 2, (K2 * data_range) ** 2

    mu_a, mu_b = F.conv2d(a, w), F.conv2d(b, w)
    var_a = F.conv2d(a * a, w) - mu_a**2
    var_b = F.conv2d(b * b, w) - mu_b**2
    cov = F.conv2d(a * b, w) - mu_a * mu_b

    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return (num / den).mean(dim=(1, 2, 3))


def ssim(a, b, data_range: float) -> float:
    """SSIM of two 2-D arrays with an 11x11 Gaussian window (sigma 1.5).

    Args:
        a: First map.
        b: Second map, same shape.
        data_range (float): Dynamic range of the values, 2 for [-1, 1] data.

    Raises:
        ValueError: When the shapes differ or data_range is not positive.

    Returns:
        float: SSIM in [-1, 1], 1 for identical maps.
    """
    if np.ndim(a) != 2:
        raise ValueError(f"ssim expects 2-D maps, got {np.ndim(a)}-D")
    return float(ssim_maps(a, b, data_range)[0])
