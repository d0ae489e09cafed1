"""Figures for experiment reports.  Uses the Agg backend throughout."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MASK_RGB = (255, 0, 0)


def field_image(field):
    """8-bit RGB array of L with the mask in red.

    Grayscale is linear between the min and max of L; a constant field is
    mid gray.  Row 0 holds the largest imaginary part.
    """
    L = np.asarray(field.L, dtype=float)
    finite = np.isfinite(L)
    lo, hi = (float(L[finite].min()), float(L[finite].max())) if finite.any() else (0.0, 0.0)
    if hi > lo:
        gray = np.rint(255 * (np.where(finite, L, lo) - lo) / (hi - lo))
    else:
        gray = np.full(L.shape, 128.0)
    img = np.repeat(gray.astype(np.uint8)[..., None], 3, axis=-1)
    img[np.asarray(field.mask, dtype=bool)] = MASK_RGB
    return img[::-1], (lo, hi)


def render_field(field, path):
    """Write the field image as PNG; returns the (min, max) used for scaling."""
    img, bounds = field_image(field)
    plt.imsave(path, img)
    return bounds


def plot_loglog(report, path, title=None, bound=None):
    """log N against -log eps with the fitted window highlighted."""
    x = -np.log(np.asarray(report.scales))
    y = np.log(np.asarray(report.counts, dtype=float))
    a, b = report.fit_range
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(x, y, "o", color="0.6", label="all scales")
    ax.plot(x[a:b], y[a:b], "o", color="C0", label=f"fit, slope {report.slope:.3f}")
    c = np.mean(y[a:b] - report.slope * x[a:b])
    ax.plot(x[a:b], c + report.slope * x[a:b], "-", color="C0")
    if bound is not None:
        ax.plot(x[a:b], c + bound * x[a:b], "--", color="C3", label=f"slope {bound:.3f}")
    ax.set_xlabel("-log eps")
    ax.set_ylabel("log N(eps)")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_census(census, path, rate=None):
    """log m(n) against n, with a reference line of slope `rate`."""
    n = census.depths
    m = census.counts
    keep = m > 0
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(n[keep], np.log(m[keep]), "o-", label="returning branches")
    s, c = census.slope()
    if np.isfinite(s):
        fit = n[n >= 4]
        ax.plot(fit, c + s * fit, "--", label=f"fit, slope {s:.3f}")
    if rate is not None:
        ax.plot(n, rate * (n - n[-1]) + np.log(max(m[-1], 1)), ":", color="0.5",
                label=f"slope {rate:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("log m(n)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_points(points, path, marks=None, title=None):
    """Scatter of complex points, optionally with highlighted marks."""
    z = np.asarray(points, dtype=complex)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(z.real, z.imag, ",", color="k")
    if marks is not None and len(marks):
        w = np.asarray(marks, dtype=complex)
        ax.plot(w.real, w.imag, "x", color="C3")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_running_mean(values, path, target=None):
    """Running mean of per-sample log-derivatives."""
    v = np.asarray(values, dtype=float)
    n = np.arange(1, len(v) + 1)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.semilogx(n, np.cumsum(v) / n)
    if target is not None:
        ax.axhline(target, color="C3", ls="--")
    ax.set_xlabel("samples")
    ax.set_ylabel("running mean")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
