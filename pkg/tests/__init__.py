# File made to access wigner_utils package
