"""振盪分析：由探針時間序列求振幅與主頻"""

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientPeriodicityError, OutputError

logger = logging.getLogger(__name__)

MIN_PEAKS = 5


@dataclass(frozen=True)
class OscillationMetrics:
    amplitude: dict
    frequency: dict
    window: tuple
    peaks: dict

    def as_lines(self):
        lines = [f'window={self.window[0]:.9g}:{self.window[1]:.9g}']
        for axis in self.amplitude:
            lines.append(f'{axis}.amplitude={self.amplitude[axis]:.9g}')
            lines.append(f'{axis}.frequency={self.frequency[axis]:.9g}')
            lines.append(f'{axis}.peaks={self.peaks[axis]}')
        return lines


def parse_window(text):
    """'50:100'、'50:'、':100' 或空字串"""
    if not text:
        return None, None
    start, sep, end = str(text).partition(':')
    if not sep:
        raise ValueError(f'分析視窗格式應為 start:end：{text}')
    return (float(start) if start else None), (float(end) if end else None)


def read_probe_csv(path):
    """回傳 (欄位名稱, 時間, 數值矩陣)"""
    try:
        with open(path, encoding='utf-8', newline='') as handle:
            rows = list(csv.reader(handle))
    except OSError as error:
        raise OutputError(f'無法讀取 {path}：{error}')
    if not rows or rows[0][0] != 'time':
        raise ValueError(f'{path} 不是探針 CSV')
    data = np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    return tuple(rows[0][1:]), data[:, 0], data[:, 1:]


def _crossing_times(t, y, level):
    """由負轉正穿越 level 的時間（線性內插）"""
    s = y - level
    k = np.flatnonzero((s[:-1] < 0.0) & (s[1:] >= 0.0))
    fraction = -s[k] / (s[k + 1] - s[k])
    return t[k] + fraction * (t[k + 1] - t[k]), k


def axis_metrics(t, y):
    """以平均值穿越切出半週期，每段取一個極值；回傳 (振幅, 頻率, 峰數)"""
    level = float(np.mean(y))
    scale = max(1.0, abs(level))
    if len(y) < 3 or np.ptp(y) <= 1e-12 * scale:
        raise InsufficientPeriodicityError('insufficient periodicity')

    s = y - level
    sign = np.where(s >= 0.0, 1, -1)
    changes = np.flatnonzero(sign[1:] != sign[:-1]) + 1
    maxima, minima = [], []
    for start, end in zip(changes[:-1], changes[1:]):
        segment = y[start:end]
        if sign[start] > 0:
            maxima.append(segment.max())
        else:
            minima.append(segment.min())
    if len(maxima) < MIN_PEAKS or len(minima) < 1:
        raise InsufficientPeriodicityError('insufficient periodicity')

    crossings, _ = _crossing_times(t, y, level)
    if len(crossings) < 2:
        raise InsufficientPeriodicityError('insufficient periodicity')
    frequency = (len(crossings) - 1) / (crossings[-1] - crossings[0])
    amplitude = 0.5 * (np.mean(maxima) - np.mean(minima))
    return float(amplitude), float(frequency), len(maxima)


def extract_oscillation_metrics(times, values, columns, window=(None, None)):
    """每個欄位在視窗內的振幅 (平均峰值 - 平均谷值)/2 與頻率（相鄰上升穿越的平均週期倒數）"""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float).reshape(len(times), -1)
    start, end = window if window is not None else (None, None)
    start = times[0] if start is None else start
    end = times[-1] if end is None else end
    if not start < end:
        raise ValueError(f'分析視窗不合法：{start}:{end}')
    inside = (times >= start) & (times <= end)
    if inside.sum() < 3:
        raise InsufficientPeriodicityError('insufficient periodicity')
    t = times[inside]

    amplitude, frequency, peaks = {}, {}, {}
    for k, column in enumerate(columns):
        amplitude[column], frequency[column], peaks[column] = axis_metrics(t, values[inside, k])
    logger.debug('振盪分析 %s：%s', columns, frequency)
    return OscillationMetrics(amplitude=amplitude, frequency=frequency, window=(float(t[0]), float(t[-1])), peaks=peaks)


def series_metrics(series, window=(None, None)):
    times, values = series.as_arrays()
    return extract_oscillation_metrics(times, values, series.columns, window)
