"""Evaluation suite: valid ratio, occupancy JSD, chamfer distance, and the
directional image/text embedding score, plus the batch harness.

Point clouds are cached per (serialized text, n, seed), and the sampling
seed is derived from the text itself, so two identical sequences always
yield the identical cloud regardless of which side of a comparison they
sit on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cad_seq import parse
from .errors import ArityMismatch, EmptyInput, SecadError, ZeroDelta
from .geometry import assemble, sample_point_cloud
from .geometry.sampling import PointCloud

JSD_RESOLUTION = 28
NEUTRAL_TEXT = "This is a 3D shape."


# ---------------------------------------------------------------------------
# Occupancy histograms and JSD


@dataclass(frozen=True)
class OccupancyHistogram:
    resolution: int
    counts: np.ndarray  # (r**3,)

    @property
    def probabilities(self) -> np.ndarray:
        total = self.counts.sum()
        if total <= 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts / total

    @classmethod
    def from_point_clouds(cls, clouds, resolution: int = JSD_RESOLUTION) -> "OccupancyHistogram":
        if not clouds:
            raise EmptyInput("no point clouds to histogram")
        pts = np.concatenate([c.points if isinstance(c, PointCloud) else np.asarray(c) for c in clouds], axis=0)
        edges = np.linspace(-0.5, 0.5, resolution + 1)
        counts, _ = np.histogramdd(pts, bins=(edges, edges, edges))
        return cls(resolution=resolution, counts=counts.ravel())


def jsd_from_probs(p, q) -> float:
    """Jensen-Shannon divergence, log base 2 (bounded by 1)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ArityMismatch("histograms differ in size")
    ps = p.sum()
    qs = q.sum()
    if ps <= 0 or qs <= 0:
        raise EmptyInput("empty histogram")
    p = p / ps
    q = q / qs
    m = 0.5 * (p + q)

    def kl(a, b):
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / b[mask])))

    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def jsd(set_a, set_b, resolution: int = JSD_RESOLUTION) -> float:
    """Pooled-occupancy JSD between two collections of point clouds."""
    if not set_a or not set_b:
        raise EmptyInput("both point-cloud sets must be non-empty")
    ha = OccupancyHistogram.from_point_clouds(set_a, resolution)
    hb = OccupancyHistogram.from_point_clouds(set_b, resolution)
    return jsd_from_probs(ha.counts, hb.counts)


# ---------------------------------------------------------------------------
# Chamfer distance


def _directed_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distance from each point of a to its nearest neighbor in b.

    The tree is only used to find the neighbor index; the squared distance
    is then recomputed from coordinates, so results match a brute-force
    argmin exactly.
    """
    from scipy.spatial import cKDTree

    _, idx = cKDTree(b).query(a)
    diff = a - b[idx]
    return np.sum(diff * diff, axis=1)


def chamfer(a, b) -> float:
    """Sum of the two directed mean squared nearest-neighbor distances."""
    pa = a.points if isinstance(a, PointCloud) else np.asarray(a, dtype=float)
    pb = b.points if isinstance(b, PointCloud) else np.asarray(b, dtype=float)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptyInput("chamfer needs non-empty clouds")
    return float(np.mean(_directed_sq(pa, pb)) + np.mean(_directed_sq(pb, pa)))


# ---------------------------------------------------------------------------
# Directional embedding score


@dataclass(frozen=True)
class DClipInputs:
    e_img_orig: np.ndarray
    e_img_edit: np.ndarray
    e_txt_orig: np.ndarray
    e_txt_edit: np.ndarray


def dclip(x: DClipInputs, eps: float = 1e-12) -> float:
    """Cosine between the image-embedding delta and the text-embedding delta."""
    di = np.asarray(x.e_img_edit, dtype=float) - np.asarray(x.e_img_orig, dtype=float)
    dt = np.asarray(x.e_txt_edit, dtype=float) - np.asarray(x.e_txt_orig, dtype=float)
    ni = float(np.linalg.norm(di))
    nt = float(np.linalg.norm(dt))
    if ni <= eps or nt <= eps:
        raise ZeroDelta("image or text embedding did not change")
    return float(di @ dt) / (ni * nt)


class EmbeddingBackend:
    """POST {"texts": [...]} or {"images": [b64 png, ...]} -> {"embeddings": [...]}."""

    def embed_texts(self, texts):
        raise NotImplementedError

    def embed_images(self, images_png):
        raise NotImplementedError


class HttpEmbeddingBackend(EmbeddingBackend):
    def __init__(self, url: str, token: str = "", timeout: float = 60.0):
        self.url = url
        self.token = token
        self.timeout = timeout

    def _post(self, payload):
        import httpx

        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        resp = httpx.post(self.url, json=payload, headers=headers, timeout=self.timeout)
        resp.raise_for_status()
        return [np.asarray(e, dtype=float) for e in resp.json()["embeddings"]]

    def embed_texts(self, texts):
        return self._post({"texts": list(texts)})

    def embed_images(self, images_png):
        import base64

        return self._post({"images": [base64.b64encode(i).decode("ascii") for i in images_png]})


# ---------------------------------------------------------------------------
# Validity and cached geometry


def _cloud_seed(text: str, base_seed: int) -> int:
    digest = hashlib.sha1(text.encode("utf-8")).digest()
    return (int.from_bytes(digest[:8], "big") ^ base_seed) % (1 << 32)


@lru_cache(maxsize=4096)
def _cloud_cached(text: str, n: int, base_seed: int, grid: int):
    model = parse(text)
    assembly = assemble(model)
    return sample_point_cloud(assembly, n=n, seed=_cloud_seed(text, base_seed), grid=grid)


def cloud_for_text(text: str, n: int = 2000, base_seed: int = 0, grid: int = 32) -> PointCloud:
    """Parse, assemble, and sample; identical text gives the identical cloud."""
    return _cloud_cached(text, n, base_seed, grid)


def candidate_validity(text: str, n: int = 512, base_seed: int = 0, grid: int = 24):
    """(parsed, rendered): rendered means geometry sampled successfully."""
    try:
        parse(text)
    except SecadError:
        return False, False
    try:
        cloud_for_text(text, n=n, base_seed=base_seed, grid=grid)
    except SecadError:
        return True, False
    return True, True


def valid_ratio(texts, n: int = 512, base_seed: int = 0, grid: int = 24) -> float:
    """Fraction of candidates that parse AND render into a non-empty solid."""
    texts = list(texts)
    if not texts:
        raise EmptyInput("no candidates")
    ok = sum(1 for t in texts if candidate_validity(t, n, base_seed, grid)[1])
    return ok / len(texts)


# ---------------------------------------------------------------------------
# Batch evaluation


@dataclass(frozen=True)
class EvalConfig:
    n_points: int = 2000
    seed: int = 0
    grid: int = 32
    jsd_resolution: int = JSD_RESOLUTION
    embedding_backend: EmbeddingBackend | None = None
    render_for_dclip: bool = True


@dataclass(frozen=True)
class MetricsReport:
    vr: float
    jsd: float
    cd: float
    cd_mean: float
    dclip: float | None
    counts: dict
    per_example: tuple = ()

    def to_json(self):
        return {
            "vr": self.vr,
            "jsd": self.jsd,
            "cd": self.cd,
            "cd_mean": self.cd_mean,
            "dclip": self.dclip,
            "counts": dict(self.counts),
        }

    def table(self) -> str:
        """Aligned text table; JSD/CD/D-CLIP scaled by 10^2, VR in percent."""
        headers = ["Method", "VR", "JSD", "CD", "D-CLIP"]
        row = [
            "secad",
            f"{self.vr * 100:.1f}",
            f"{self.jsd * 100:.2f}",
            f"{self.cd * 100:.2f}",
            "-" if self.dclip is None else f"{self.dclip * 100:.2f}",
        ]
        widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
        line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
        vals = "  ".join(v.ljust(w) for v, w in zip(row, widths))
        return line + "\n" + vals

    def csv(self) -> str:
        dc = "" if self.dclip is None else f"{self.dclip * 100:.4f}"
        return (
            "method,vr,jsd,cd,dclip\n"
            f"secad,{self.vr * 100:.4f},{self.jsd * 100:.4f},{self.cd * 100:.4f},{dc}\n"
        )


def evaluate(testset, results, cfg: EvalConfig = EvalConfig()) -> MetricsReport:
    """Score per-example EditResults against ground-truth triplets.

    VR counts every candidate; JSD pools ground-truth clouds against all
    valid candidate clouds; CD keeps the best (minimum) valid candidate per
    example and also reports the per-example mean as a secondary value.
    """
    testset = list(testset)
    results = list(results)
    if not testset:
        raise EmptyInput("empty test set")
    if len(results) != len(testset):
        raise ArityMismatch(f"{len(results)} results for {len(testset)} examples")
    k = results[0].k if hasattr(results[0], "k") else len(results[0].candidates)
    for r in results:
        if len(r.candidates) != k:
            raise ArityMismatch("all results must carry the same candidate count")

    total = parsed = rendered = 0
    gt_clouds = []
    cand_clouds = []
    best_cds = []
    mean_cds = []
    dclips = []
    per_example = []

    for triplet, result in zip(testset, results):
        gt_cloud = cloud_for_text(triplet.edit_text, cfg.n_points, cfg.seed, cfg.grid)
        gt_clouds.append(gt_cloud)
        example_cds = []
        best_cd = None
        best_text = None
        for cand in result.candidates:
            if hasattr(cand, "edit_text"):
                text = cand.edit_text
            elif isinstance(cand, dict):
                text = cand.get("edit_text", "")
            else:
                text = str(cand)
            total += 1
            p_ok, r_ok = candidate_validity(text, n=cfg.n_points, base_seed=cfg.seed, grid=cfg.grid)
            parsed += int(p_ok)
            rendered += int(r_ok)
            if not r_ok:
                continue
            cloud = cloud_for_text(text, cfg.n_points, cfg.seed, cfg.grid)
            cand_clouds.append(cloud)
            cd = chamfer(cloud, gt_cloud)
            example_cds.append(cd)
            if best_cd is None or cd < best_cd:
                best_cd = cd
                best_text = text
        if example_cds:
            best_cds.append(best_cd)
            mean_cds.append(float(np.mean(example_cds)))
        if cfg.embedding_backend is not None and best_text is not None:
            value = _example_dclip(triplet, best_text, cfg)
            if value is not None:
                dclips.append(value)
        per_example.append({"best_cd": best_cd, "n_valid": len(example_cds)})

    vr = rendered / total if total else 0.0
    pooled_jsd = jsd(gt_clouds, cand_clouds, cfg.jsd_resolution) if cand_clouds else 1.0
    report = MetricsReport(
        vr=vr,
        jsd=pooled_jsd,
        cd=float(np.mean(best_cds)) if best_cds else float("nan"),
        cd_mean=float(np.mean(mean_cds)) if mean_cds else float("nan"),
        dclip=float(np.mean(dclips)) if dclips else None,
        counts={"total": total, "parsed": parsed, "rendered": rendered, "examples": len(testset)},
        per_example=tuple(per_example),
    )
    return report


def _example_dclip(triplet, best_text, cfg: EvalConfig):
    from .geometry import mesh, render_preview

    backend = cfg.embedding_backend
    try:
        img_orig = render_preview(mesh(parse(triplet.orig_text))).to_png()
        img_edit = render_preview(mesh(parse(best_text))).to_png()
        e_imgs = backend.embed_images([img_orig, img_edit])
        t_edit = NEUTRAL_TEXT + " " + triplet.instruction.text
        e_txts = backend.embed_texts([NEUTRAL_TEXT, t_edit])
        return dclip(DClipInputs(e_imgs[0], e_imgs[1], e_txts[0], e_txts[1]))
    except SecadError:  # unchanged embeddings or render failures: skip
        return None


def save_report(report: MetricsReport, out_dir, figures: bool = True):
    """Write report.json / report.txt / report.csv and summary figures."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(report.table() + "\n", encoding="utf-8")
    (out / "report.csv").write_text(report.csv(), encoding="utf-8")
    if figures:
        save_report_figures(report, out)
    return out


def save_report_figures(report: MetricsReport, out_dir):
    """Matplotlib summaries rendered next to the delimited output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out = Path(out_dir)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    names = ["VR (%)", "JSD x100", "CD x100"]
    values = [report.vr * 100, report.jsd * 100, report.cd * 100]
    if report.dclip is not None:
        names.append("D-CLIP x100")
        values.append(report.dclip * 100)
    axes[0].bar(names, values, color=["#4c72b0", "#dd8452", "#55a868", "#c44e52"][: len(names)])
    axes[0].set_title("Metrics")
    axes[0].tick_params(axis="x", rotation=20)

    counts = report.counts
    axes[1].bar(
        ["total", "parsed", "rendered"],
        [counts.get("total", 0), counts.get("parsed", 0), counts.get("rendered", 0)],
        color="#4c72b0",
    )
    axes[1].set_title("Candidate validity")
    fig.tight_layout()
    fig.savefig(out / "report.png", dpi=120)
    plt.close(fig)
    return out / "report.png"
