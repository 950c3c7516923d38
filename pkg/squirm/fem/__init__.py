"""Finite element spaces, quadrature and block assembly"""
