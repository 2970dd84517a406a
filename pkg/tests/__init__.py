# eptrap test suite
