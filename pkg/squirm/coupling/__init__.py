"""Matrix surgery that turns force-free holes into squirmers, and the coupled saddle system"""
