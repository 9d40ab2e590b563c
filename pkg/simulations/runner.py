"""執行一個案例：建立狀態、推進時間、依排程取樣與寫出快照"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .cases import build_benchmark_case
from .exceptions import SimulationError
from .integration import advance_advection_step
from .outputs import write_outputs, write_snapshot
from .probes import bind_probes, record_probes

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    config: object
    state: object
    series: list
    output_dir: Path
    snapshots: list = field(default_factory=list)
    status: str = 'completed'


def _mark_failed(record, error, state=None):
    if record is None:
        return
    if state is not None:
        record.update_progress(state)
    record.status = 'FAILED'
    record.message = str(error)
    record.save()


class Schedule:
    """t_k = k·interval（k >= 1）的排程；以整數計數避免累積誤差"""

    def __init__(self, interval):
        self.interval = interval
        self.k = 1

    @property
    def next_time(self):
        if self.interval is None:
            return math.inf
        return self.k * self.interval

    def due(self, t):
        return self.next_time <= t + 1e-12 * max(1.0, abs(t))

    def advance(self, t):
        while self.due(t):
            self.k += 1


def run_case(config, output_dir, workers=None, record=None, max_steps=None):
    """執行案例直到 end_time；record 為 SimulationRun 時同步更新執行紀錄

    沒有設定 snapshot_interval 時只在結束時寫出一個快照。
    """
    output_dir = Path(output_dir)
    try:
        state = build_benchmark_case(config, workers=workers)
        series = bind_probes(state, config.probes)
    except SimulationError as error:
        logger.error('%s: 案例建立失敗：%s', config.name, error)
        _mark_failed(record, error)
        raise
    record_probes(state, series, state.clock.t)
    result = RunResult(config=config, state=state, series=series, output_dir=output_dir)

    probes = Schedule(config.probe_interval)
    snapshots = Schedule(config.snapshot_interval)
    logger.info(
        '%s: 開始執行（%d 顆粒子，dp^S=%.4g，dp^F=%.4g，修正=%s）',
        config.name, state.particle_count, config.dp_solid, config.dp_fluid, config.correction,
    )
    if record is not None:
        record.status = 'RUNNING'
        record.save()

    clock = state.clock
    try:
        while config.end_time - clock.t > 1e-12 * max(1.0, config.end_time):
            if max_steps is not None and clock.advection_index >= max_steps:
                break
            limit = min(config.end_time, probes.next_time, snapshots.next_time) - clock.t
            advance_advection_step(state, max_dt=limit)
            if probes.due(clock.t):
                record_probes(state, series, clock.t)
                probes.advance(clock.t)
            if snapshots.due(clock.t):
                result.snapshots.append(write_snapshot(state, output_dir))
                snapshots.advance(clock.t)
        if config.snapshot_interval is None:
            result.snapshots.append(write_snapshot(state, output_dir))
    except SimulationError as error:
        result.status = 'failed'
        logger.error('%s: 執行中止：%s', config.name, error)
        write_outputs(config, state, series, output_dir, status='failed', extra={'error': str(error)})
        _mark_failed(record, error, state)
        raise

    write_outputs(config, state, series, output_dir, extra={'snapshots': len(result.snapshots)})
    if record is not None:
        record.update_progress(state)
        record.status = 'COMPLETED'
        record.save()
    logger.info(
        '%s: 完成 t=%.6g，%d 個 advection 步，%d 個 acoustic 步，%.1f 秒',
        config.name, clock.t, clock.advection_index, clock.acoustic_index, clock.wall_seconds,
    )
    return result
