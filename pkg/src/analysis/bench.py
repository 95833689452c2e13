"""
Attention scaling benchmark: analytic cost and measured wall time of
global versus local-window attention over a sweep of token counts.
"""

import logging
import time
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from ..blocks.attention import MSAConfig, MultiHeadSelfAttention
from ..models.sst import attention_cost, window_attention
from ..tensor import Tensor, no_grad

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (400, 800, 1600, 3200)
DEFAULT_MODES = ("global", "windowed")
BENCH_FREQ = 20
BENCH_CHANNELS = 96
BENCH_WINDOW = 5
BENCH_HEADS = 3
MIN_REPEATS = 5
REPORT_COLUMNS = ["tokens", "freq", "time", "mode", "flops", "median_seconds", "repeats"]


def _grid(tokens: int, freq: int) -> Tuple[int, int]:
    if tokens <= 0 or tokens % freq:
        raise ValueError(f"token count {tokens} must be a positive multiple of {freq}")
    return freq, tokens // freq


class AttentionBenchmark:
    """Time global and windowed attention on (1, t, f, C) grids."""

    def __init__(
        self,
        channels: int = BENCH_CHANNELS,
        window: int = BENCH_WINDOW,
        heads: int = BENCH_HEADS,
        freq: int = BENCH_FREQ,
        repeats: int = MIN_REPEATS,
        seed: int = 0,
    ):
        self.channels, self.window, self.freq = channels, window, freq
        self.repeats = max(repeats, MIN_REPEATS)
        self.rng = np.random.default_rng(seed)
        self.global_attn = MultiHeadSelfAttention(MSAConfig(channels, heads, "none"), rng=self.rng).eval()
        self.window_attn = MultiHeadSelfAttention(
            MSAConfig(channels, heads, "window_bias", window), rng=self.rng
        ).eval()

    def _run(self, mode: str, grid: Tensor) -> None:
        if mode == "global":
            batch, height, width, channels = grid.shape
            self.global_attn(grid.reshape(batch, height * width, channels))
        elif mode == "windowed":
            window_attention(grid, self.window_attn, self.window, 0)
        else:
            raise ValueError(f"mode must be one of {DEFAULT_MODES}, got {mode!r}")

    def measure(self, tokens: int, mode: str) -> dict:
        freq, steps = _grid(tokens, self.freq)
        grid = Tensor(self.rng.standard_normal((1, steps, freq, self.channels)), dtype=np.float32)
        timings = []
        with no_grad():
            self._run(mode, grid)  # warm-up
            for _ in range(self.repeats):
                start = time.perf_counter()
                self._run(mode, grid)
                timings.append(time.perf_counter() - start)
        row = {
            "tokens": tokens,
            "freq": freq,
            "time": steps,
            "mode": mode,
            "flops": attention_cost(freq, steps, self.channels, self.window, mode),
            "median_seconds": float(np.median(timings)),
            "repeats": self.repeats,
        }
        logger.info("%-8s %5d tokens: %.4fs (median of %d)", mode, tokens, row["median_seconds"], self.repeats)
        return row

    def run(self, sizes: Sequence[int] = DEFAULT_SIZES, modes: Sequence[str] = DEFAULT_MODES) -> pd.DataFrame:
        rows = [self.measure(tokens, mode) for mode in modes for tokens in sizes]
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def scaling_exponents(report: pd.DataFrame, column: str = "median_seconds") -> Dict[str, float]:
    """Slope of log(column) against log(tokens), per mode."""
    exponents = {}
    for mode, group in report.groupby("mode"):
        if group["tokens"].nunique() < 2:
            continue
        fit = stats.linregress(np.log(group["tokens"].to_numpy(float)), np.log(group[column].to_numpy(float)))
        exponents[mode] = float(fit.slope)
    return exponents


def bench_attention(
    sizes: Sequence[int] = DEFAULT_SIZES,
    modes: Sequence[str] = DEFAULT_MODES,
    output: Optional[Union[str, Path]] = None,
    **kwargs,
) -> pd.DataFrame:
    """Run the sweep and optionally write the CSV report."""
    report = AttentionBenchmark(**kwargs).run(sizes, modes)
    if output is not None:
        output = Path(output)
        output.parent.mkdir(parents=True, exist_ok=True)
        report.to_csv(output, index=False)
        logger.info("Wrote benchmark report to %s", output)
    return report


def main():
    report = bench_attention(sizes=(400, 800, 1600))
    print(report.to_string(index=False))
    for mode, slope in scaling_exponents(report).items():
        print(f"{mode}: wall-time exponent {slope:.2f}")
    for mode, slope in scaling_exponents(report, "flops").items():
        print(f"{mode}: analytic exponent {slope:.2f}")


if __name__ == "__main__":
    main()
