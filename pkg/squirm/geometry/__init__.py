"""Meshes of the fluid domain: charts, motion, generation and remeshing"""
