"""Reference values for the k=7 experiments (rows: nu, columns: omega)."""

NU = (1e-2, 1e-4, 1e-6, 1e-8)
OMEGA = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e2, 1e3, 1e4)

# printed alpha estimates; the number of decimals carries the rounding
ALPHA_EST = (
    ("0.00003", "0.00003", "0.00003", "0.00003", "0.000031", "0.000061", "0.003080", "0.304939", "30.490909"),
    ("0.00003", "0.00003", "0.00003", "0.00003", "0.00003", "0.000031", "0.000061", "0.003080", "0.304939"),
    ("0.00003", "0.00003", "0.00003", "0.00003", "0.00003", "0.00003", "0.000031", "0.000061", "0.003080"),
    ("0.00003", "0.00003", "0.00003", "0.00003", "0.00003", "0.00003", "0.00003", "0.000031", "0.000061"),
)

# None marks non-convergence within 500 iterations
STATIONARY = {
    "mbas": (
        (46, 46, 46, 46, 46, 45, 42, 36, 42),
        (42, 42, 42, 42, 42, 42, 41, 36, 42),
        (36, 36, 36, 36, 36, 36, 36, 37, 42),
        (42, 42, 42, 42, 42, 42, 42, 42, 43),
    ),
    "bas": (
        (39, 39, 39, 39, 38, 24, 465, None, None),
        (36, 36, 36, 36, 36, 36, 39, None, None),
        (33, 33, 33, 33, 33, 33, 33, 56, None),
        (38, 38, 38, 38, 38, 38, 38, 38, 64),
    ),
    "asss": (
        (57, 57, 57, 57, 57, 56, 53, 44, 51),
        (53, 53, 53, 53, 53, 53, 52, 44, 51),
        (44, 44, 44, 44, 44, 44, 44, 43, 51),
        (51, 51, 51, 51, 51, 51, 51, 51, 52),
    ),
}

PRECONDITIONED = {
    "mbas": (
        (31, 31, 31, 31, 31, 31, 32, 34, 28),
        (32, 32, 32, 32, 32, 32, 32, 34, 28),
        (32, 32, 32, 32, 32, 32, 32, 32, 28),
        (27, 27, 27, 27, 27, 27, 27, 27, 27),
    ),
    "bas": (
        (20, 21, 22, 22, 22, 22, 20, 47, 50),
        (20, 21, 22, 22, 22, 22, 20, 47, 50),
        (18, 19, 20, 21, 21, 21, 22, 28, 49),
        (18, 19, 20, 20, 21, 22, 22, 22, 28),
    ),
    "asss": (
        (36, 36, 36, 36, 36, 36, 38, 38, 38),
        (36, 36, 36, 36, 36, 36, 37, 38, 38),
        (37, 37, 37, 37, 37, 37, 37, 38, 38),
        (37, 37, 37, 37, 37, 37, 37, 37, 36),
    ),
}
