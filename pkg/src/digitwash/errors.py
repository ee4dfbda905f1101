"""Exception hierarchy shared across the pipeline stages."""


class DigitwashError(Exception):
    """Base class for all pipeline errors."""


class ValidationError(DigitwashError):
    """Bad inputs or configuration (CLI exit code 1)."""


class EstimationError(DigitwashError):
    """Numerical / statistical failure (CLI exit code 2)."""


# --- ingestion ---

class MissingColumn(ValidationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"required column missing: {name!r}")


class DuplicateKey(ValidationError):
    def __init__(self, firm_id, year):
        self.firm_id, self.year = firm_id, year
        super().__init__(f"duplicate key ({firm_id!r}, {year})")


class DegenerateColumn(ValidationError):
    def __init__(self, detail="fewer than 2 non-missing values"):
        super().__init__(detail)


class UndefinedRatio(ValidationError):
    def __init__(self, variable):
        self.variable = variable
        super().__init__(f"ratio undefined for {variable!r} (non-positive denominator)")


class EmptyJoin(ValidationError):
    def __init__(self):
        super().__init__("no (firm_id, year) keys align across inputs")


# --- text ---

class InvalidRegex(ValidationError):
    def __init__(self, term, detail=""):
        self.term = term
        super().__init__(f"invalid regex term {term!r}: {detail}")


class EmptyDocument(ValidationError):
    def __init__(self, firm_id, year):
        self.firm_id, self.year = firm_id, year
        super().__init__(f"empty document for ({firm_id!r}, {year})")


# --- crash risk ---

class NoCapData(EstimationError):
    def __init__(self, week_index):
        self.week_index = week_index
        super().__init__(f"no market-cap data for week {week_index}")


class InsufficientWeeks(EstimationError):
    def __init__(self, firm_id, year, n):
        self.firm_id, self.year, self.n = firm_id, year, n
        super().__init__(f"({firm_id!r}, {year}): only {n} usable weeks")


class SingularDesign(EstimationError):
    def __init__(self, detail="collinear market regressors"):
        super().__init__(detail)


class TooFewWeeks(EstimationError):
    def __init__(self, n):
        self.n = n
        super().__init__(f"need at least 3 values, got {n}")


class ZeroDispersion(EstimationError):
    def __init__(self):
        super().__init__("all values equal; skewness undefined")


# --- regression ---

class RankDeficient(EstimationError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"design matrix rank deficient at column {column!r}")


class NonConvergence(EstimationError):
    def __init__(self, sweeps, delta):
        self.sweeps, self.delta = sweeps, delta
        super().__init__(f"demeaning did not converge after {sweeps} sweeps (delta={delta:.3e})")


class UndefinedDoF(EstimationError):
    def __init__(self, n, k):
        super().__init__(f"degrees of freedom exhausted (n={n}, k={k})")


# --- gdt / inference ---

class UndefinedDTD(ValidationError):
    def __init__(self, firm_id, year):
        super().__init__(f"DTD undefined for ({firm_id!r}, {year}): non-positive intangibles")


class InsufficientPairs(EstimationError):
    def __init__(self, n):
        super().__init__(f"only {n} consecutive-year pairs available")


class ZeroVariance(EstimationError):
    def __init__(self, group):
        super().__init__(f"zero variance in group {group}")


class IncomparableSamples(EstimationError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"regressor {column!r} drops in one group only")


# --- warnings ---

class EmptyGroupWarning(UserWarning):
    pass


class SingletonClustersWarning(UserWarning):
    pass
