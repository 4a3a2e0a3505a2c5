# Bound computation services
