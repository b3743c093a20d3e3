"""Calibration probe for the synthetic-classification acceptance criterion."""
import time

from ncdm import (
    Bz2Backend,
    CellModelParams,
    Element,
    LabeledCorpus,
    Multiset,
    NcdCalculator,
    TimeSeries,
    fit_quantizer,
    loocv,
    quantize_timeseries,
    simulate_population,
)
from ncdm.datagen import FEATURE_NAMES

t0 = time.perf_counter()
fast = simulate_population(CellModelParams(upsilon=3.0, seed=101), 60)
slow = simulate_population(CellModelParams(upsilon=0.9, seed=202), 60)
print(f"simulated in {time.perf_counter()-t0:.1f}s")

series = {}
for label, tracks in (("fast", fast), ("slow", slow)):
    series[label] = [
        TimeSeries(t.features, FEATURE_NAMES, name=f"{label}-{t.index:03d}") for t in tracks
    ]
pool = series["fast"] + series["slow"]

for n_symbols in (3, 5, 6):
    t0 = time.perf_counter()
    quantizer = fit_quantizer(pool, n_symbols)
    classes = {
        label: Multiset([quantize_timeseries(ts, quantizer=quantizer) for ts in series[label]])
        for label in series
    }
    sample = classes["fast"][0]
    print(f"n={n_symbols}: element bytes ~{len(sample.data)}")
    corpus = LabeledCorpus(classes=classes)
    calc = NcdCalculator(Bz2Backend(), jobs=2)
    t1 = time.perf_counter()
    pairwise = loocv(calc, corpus, method="min-distance")
    t2 = time.perf_counter()
    delta = loocv(calc, corpus, method="delta-ncd1")
    t3 = time.perf_counter()
    print(
        f"n={n_symbols}: min-distance {pairwise.accuracy:.3f} ({t2-t1:.0f}s)  "
        f"delta {delta.accuracy:.3f} ({t3-t2:.0f}s)"
    )
