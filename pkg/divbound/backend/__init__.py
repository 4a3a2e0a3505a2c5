# Backend: numerical services and utilities
