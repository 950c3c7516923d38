"""Exact squirmer solutions, error norms and convergence orders"""
