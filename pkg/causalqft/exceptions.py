class CausalQFTException(Exception):
    pass


# Bad input: malformed partitions, negative line counts, missing
# normalization data, exceeded caps, impossible normalization requests
class ValidationError(CausalQFTException):
    pass


# Quadrature non-convergence, pole proximity, epsilon below the safe minimum
class NumericError(CausalQFTException):
    pass
