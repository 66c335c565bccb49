"""
Command dispatch: runs module operations and writes deterministic reports
"""
import logging
import math
from typing import Callable, Dict

import numpy as np
import pandas as pd

from src.cantor.models import DiscreteMeasure
from src.cantor.shift import shift_fit
from src.cantor.system import build_system, haar_measure, measure_account, random_code_pairs, verify_modulus
from src.cli.config import COMMANDS, RunConfig
from src.data.loaders import load_anchors, load_ifs, load_matrix, load_points
from src.data.report import ReportWriter
from src.embedding.assouad import distortion_report, embed_cloud, normalize_diameter
from src.errors import MetrifractError, ReportError, SpecParseError, ValidationRejected
from src.gauges.models import parse_gauge
from src.gauges.transforms import hat_transform, ord_estimate
from src.holder.curves import (
    grid_cells_hit, hilbert_curve, hilbert_lattice, hilbert_modulus, interleave_modulus_report, interleave_surjectivity
)
from src.holder.extension import mcshane_extend
from src.holder.pipeline import PipelineParams, pipeline_map_onto_cube
from src.metric.covering import nonexploding_profile, slowness_profile
from src.metric.models import PointCloud, SlowSchedule
from src.selfsimilar.dimension import box_dimension, premeasure_series
from src.selfsimilar.ifs import attractor_points, chaos_game, moran_dimension, osc_check
from config.settings import (
    DEFAULT_SCHEDULE_NMAX, GAUGE_DEFAULT_DECADES, PIPELINE_DEPTH, PIPELINE_EPSILON, PIPELINE_N_MAX
)


class CommandDispatcher:
    """コマンドごとの処理とレポート出力を担当するクラス"""

    def __init__(self, config: RunConfig):
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.writer = ReportWriter(config.output_dir)
        self.handlers: Dict[str, Callable[[], None]] = {name: getattr(self, f"run_{name}") for name in COMMANDS}

    def run(self) -> int:
        """終了コード: 0 成功, 1 検証による拒否, 2 入出力・解析エラー"""
        command = self.config.command
        if command not in self.handlers:
            self.logger.error(f"未知のコマンド: '{command}'（{', '.join(COMMANDS)} のいずれか）")
            return 2
        self.logger.info(f"===== {command} 開始 =====")
        try:
            self.handlers[command]()
            return 0
        except ValidationRejected as e:
            witness = f" witness={e.witness}" if e.witness is not None else ""
            self.logger.error(f"検証により拒否されました: {e}{witness}")
            return 1
        except ReportError as e:
            self.logger.error(f"レポート出力エラー: {e}")
            return 1
        except SpecParseError as e:
            self.logger.error(f"仕様の解析エラー: {e}")
            return 2
        except OSError as e:
            self.logger.error(f"入出力エラー: {e}")
            return 2
        finally:
            self.logger.info(f"===== {command} 終了 =====")

    # 入力

    def _cloud(self) -> PointCloud:
        c = self.config
        if c.points is not None:
            return load_points(c.points)
        if c.matrix is not None:
            return load_matrix(c.matrix)
        raise SpecParseError("--points または --matrix が必要です")

    def _schedule(self) -> SlowSchedule:
        if not self.config.G:
            raise SpecParseError("--G が必要です")
        return SlowSchedule.parse(self.config.G, self.config.nmax)

    def _require(self, name: str):
        value = getattr(self.config, name)
        if value is None:
            raise SpecParseError(f"--{name} が必要です")
        return value

    # コマンド

    def run_profile(self):
        c = self.config
        cloud = self._cloud()
        n_max = DEFAULT_SCHEDULE_NMAX if c.nmax is None else c.nmax
        profile = nonexploding_profile(cloud, range(c.nmin, n_max + 1), c.threads)
        rows = profile.to_frame()
        slowness = slowness_profile(rows["G"].tolist()) if rows["n"].iloc[0] == 0 else pd.DataFrame()
        report = {"points": cloud.size, "n_min": c.nmin, "n_max": n_max, **profile.summary()}
        series = {"rows": rows, "series": profile.series_frame()}
        if len(slowness):
            series["slowness"] = slowness
        self.writer.emit_report(report, "profile", series)

    def run_embed(self):
        c = self.config
        cloud = normalize_diameter(self._cloud())
        n_max = DEFAULT_SCHEDULE_NMAX if c.nmax is None else c.nmax
        emb = embed_cloud(cloud, c.nmin, n_max, c.threads)
        distortion = distortion_report(cloud, emb, c.threads)
        report = {
            "points": cloud.size,
            "diameter": cloud.diameter,
            "schedule": {"G": list(emb.schedule.counts), "K": emb.schedule.K},
            "n_min": emb.n_min,
            "n_max": emb.n_max,
            "distortion": distortion,
        }
        images = pd.DataFrame(emb.images, columns=[f"x{k}" for k in range(emb.schedule.K)])
        self.writer.emit_report(report, "embed", {"images": images})

    def run_cantor(self):
        c = self.config
        sched = self._schedule()
        depth = PIPELINE_DEPTH if c.depth is None else c.depth
        system = build_system(self._require("epsilon"), sched, depth)
        account = measure_account(system)
        report = {"system": system.descriptor(), "K": system.K, "measure": account}
        if c.verify:
            pairs = random_code_pairs(system, c.verify, depth, c.seed)
            report["verification"] = verify_modulus(system, pairs, c.threads)
            report["verification_depth"] = depth
        self.writer.emit_report(report, "cantor", {"blocks": pd.DataFrame(account.per_block)})

    def run_shift(self):
        c = self.config
        sched = self._schedule()
        depth = PIPELINE_DEPTH if c.depth is None else c.depth
        system = build_system(c.epsilon or PIPELINE_EPSILON, sched, depth)
        if c.points is not None:
            mu = DiscreteMeasure.uniform(load_points(c.points).points)
        else:
            mu = haar_measure(system.K, c.atoms or 1000, c.seed)
        result = shift_fit(system, mu, depth, c.threads)
        account = measure_account(system)
        report = {
            "system": system.descriptor(),
            "atoms": len(mu.points),
            "shift": result,
            "delta_trunc": account.delta_trunc,
            "capture_floor": 1 - float(system.epsilon) - account.delta_trunc,
        }
        self.writer.emit_report(report, "shift")

    def run_gauge(self):
        c = self.config
        h = parse_gauge(self._require("gauge"))
        decades = c.decades or GAUGE_DEFAULT_DECADES
        estimate = ord_estimate(h, decades)
        report = {"gauge": h.describe(), "ord": estimate}
        series = {"ord": estimate.to_frame()}
        if c.beta is not None:
            result = hat_transform(h, c.beta, decades, strict=True, seed=c.seed)
            report["hat"] = {"gauge": result.gauge.describe(), "report": result.report}
            series["hat"] = pd.DataFrame({"r": result.grid, "hat": result.values, "h": h(result.grid)})
        self.writer.emit_report(report, "gauge", series)

    def run_extend(self):
        cloud = self._cloud()
        anchors = load_anchors(self._require("anchors"))
        h = parse_gauge(self._require("gauge"))
        values = mcshane_extend(anchors, h, cloud, np.arange(cloud.size))
        report = {"points": cloud.size, "anchors": len(anchors.indices), "m": anchors.m, "gauge": h.describe()}
        frame = pd.DataFrame(values, columns=[f"y{k + 1}" for k in range(anchors.m)])
        self.writer.emit_report(report, "extend", {"values": frame})

    def run_curve(self):
        c = self.config
        m = self._require("m")
        order = self._require("order")
        if c.n is not None:
            report = {
                "map": "interleave",
                "n": c.n,
                "m": m,
                "precision": order,
                "surjectivity": interleave_surjectivity(c.n, m, order),
                "modulus": interleave_modulus_report(c.n, m, order, c.count or 10_000, c.seed),
                "discontinuous_on_dyadic_mesh": True,
            }
            self.writer.emit_report(report, "curve")
            return
        count = c.count or 1025
        t = np.linspace(0.0, 1.0, count)
        values = hilbert_curve(m, order, t)
        cells_level = min(order, 6)
        report = {
            "map": "hilbert",
            "m": m,
            "order": order,
            "cells_level": cells_level,
            "cells_hit": grid_cells_hit(np.ldexp(hilbert_lattice(m, cells_level), -cells_level), cells_level),
            "modulus": hilbert_modulus(m, order, seed=c.seed),
        }
        frame = pd.DataFrame(np.column_stack([t, values]), columns=["t"] + [f"x{k + 1}" for k in range(m)])
        self.writer.emit_report(report, "curve", {"points": frame})

    def run_ifs(self):
        c = self.config
        ifs = load_ifs(self._require("ifs"))
        depth = 6 if c.depth is None else c.depth
        sample = attractor_points(ifs, depth, c.threads)
        report = {
            "maps": len(ifs.maps),
            "dim": ifs.dim,
            "ratios": ifs.ratios,
            "moran_dimension": moran_dimension(ifs),
            "depth": depth,
            "points": len(sample),
        }
        if ifs.open_set is not None:
            report["osc"] = osc_check(ifs)
        frame = pd.DataFrame(sample.points, columns=[f"x{k + 1}" for k in range(ifs.dim)])
        frame.insert(0, "word", sample.words())
        self.writer.emit_report(report, "ifs", {"points": frame})

    def run_dimension(self):
        c = self.config
        if c.ifs is not None:
            ifs = load_ifs(c.ifs)
            cloud = attractor_points(ifs, 6 if c.depth is None else c.depth, c.threads).to_cloud()
            moran = moran_dimension(ifs)
        else:
            cloud = self._cloud()
            moran = None
        finest = c.order or 6
        radii = [math.ldexp(1.0, -k) for k in range(2, finest + 1)]
        box = box_dimension(cloud, radii)
        report = {"points": cloud.size, "box_dimension": box, "moran_dimension": moran}
        series = {"box": box.series}
        if c.gauge:
            g = parse_gauge(c.gauge)
            delta = c.delta or radii[-1]
            deltas = [delta * 2 ** k for k in range(4, -1, -1)]
            pre = premeasure_series(cloud, g, deltas)
            report["premeasure"] = {"gauge": g.describe(), "nested": pre["nested"], "monotone": pre["monotone"]}
            series["premeasure"] = pre["series"]
        self.writer.emit_report(report, "dimension", series)

    def run_pipeline(self):
        c = self.config
        if c.ifs is not None:
            ifs = load_ifs(c.ifs)
            cloud = PointCloud.from_points(chaos_game(ifs, c.count or 500, c.seed))
        else:
            cloud = self._cloud()
        cloud = normalize_diameter(cloud)
        params = PipelineParams(
            epsilon=c.epsilon or PIPELINE_EPSILON,
            depth=PIPELINE_DEPTH if c.depth is None else c.depth,
            n_min=c.nmin,
            n_max=PIPELINE_N_MAX if c.nmax is None else c.nmax,
            gauge=parse_gauge(c.gauge) if c.gauge else None,
            order=c.order,
            seed=c.seed,
            workers=c.threads,
        )
        if c.beta is not None:
            params.hat_beta = c.beta
        result = pipeline_map_onto_cube(cloud, c.m or 1, params=params)
        frame = pd.DataFrame(result.image, columns=[f"y{k + 1}" for k in range(result.m)])
        self.writer.emit_report(result, "pipeline", {"image": frame})


def dispatch(config: RunConfig) -> int:
    """設定に従ってコマンドを実行し終了コードを返す"""
    try:
        return CommandDispatcher(config).run()
    except MetrifractError as e:
        logging.getLogger(__name__).error(f"実行エラー: {e}")
        return e.exit_code
