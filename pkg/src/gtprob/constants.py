"""Data and published values for the worked examples reproduced by ``gtprob reproduce``."""

# 100 trials of an event that happens 70 times.
BINOMIAL_TRIALS = 100
BINOMIAL_SUCCESSES = 70
BINOMIAL_PUBLISHED = {  # grade -> approximate published range
    "Good": (0.64, 0.76),
    "Fair or better": (0.61, 0.78),
    "Acceptable": (0.59, 0.80),
}

# Length of the masculine generation, Paris, 18th century; Fourier's 1829
# statistics-bureau report (505 cases, mean 33.31 years). The standard
# deviation is backed out from his error probabilities.
FOURIER_N = 505
FOURIER_MEAN = 33.31
FOURIER_SD = 7.642
FOURIER_ERRORS_MONTHS = {  # two-sided probability -> error bound in months
    1 / 2: 2.7528,
    1 / 20: 7.9932,
    1 / 200: 11.4516,
    1 / 2000: 14.2044,
    1 / 20000: 16.5480,
}
FOURIER_INTERVALS = {  # two-sided probability -> published interval in years
    1 / 2: (33.1, 33.5),
    1 / 20: (32.6, 34.0),
    1 / 200: (32.4, 34.3),
    1 / 2000: (32.1, 34.5),
    1 / 20000: (31.9, 34.7),
}
FOURIER_RANGES_PUBLISHED = {2: (32.9, 33.7), 5: (32.8, 33.8), 15: (32.7, 33.9)}

# Fictional survey: positive responses / respondents per cell.
SURVEY_CELLS = ("bf", "bm", "wf", "wm")
SURVEY_COUNTS = {"bf": (8, 10), "bm": (12, 20), "wf": (20, 50), "wm": (20, 120)}
SURVEY_SE_PUBLISHED = 0.18
SURVEY_DIFF_CLAIM = "a little more than 0 to about 0.4"
