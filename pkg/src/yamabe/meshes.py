"""
Regression meshes for the discrete Yamabe flow.

"""
import numpy as np

from .TriangulatedSurface import TriangulatedSurface


def tetrahedron():
    '''Boundary of the regular tetrahedron, unit edges, K_i = π'''
    faces = [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)]
    lengths = {(i, j): 1.0 for i in range(4) for j in range(i + 1, 4)}
    return TriangulatedSurface.from_faces(4, faces, lengths)


def octahedron():
    '''Boundary of the regular octahedron, unit edges, K_i = 2π/3

    Vertices 0, 1 are ±x, 2, 3 are ±y and 4, 5 are ±z.
    '''
    faces = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
             (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    antipodes = {frozenset((0, 1)), frozenset((2, 3)), frozenset((4, 5))}
    lengths = {(i, j): 1.0 for i in range(6) for j in range(i + 1, 6)
               if frozenset((i, j)) not in antipodes}
    return TriangulatedSurface.from_faces(6, faces, lengths)


def flat_torus(rows=2, cols=4):
    '''Equilateral flat torus from a rows x cols patch of the triangular lattice

    Vertex (r, c) has index r * cols + c. Each lattice cell gives the triangles
    [(r,c), (r,c+1), (r+1,c)] and [(r,c+1), (r+1,c+1), (r+1,c)]. Edge ids are explicit
    because for rows = 2 two distinct edges join (r, c) and (r+1, c).
    '''
    def vertex(r, c):
        return (r % rows) * cols + (c % cols)

    def horizontal(r, c):
        return (r % rows) * cols + (c % cols)

    def vertical(r, c):
        return rows * cols + (r % rows) * cols + (c % cols)

    def diagonal(r, c):
        return 2 * rows * cols + (r % rows) * cols + (c % cols)

    faces, face_edges = [], []
    for r in range(rows):
        for c in range(cols):
            faces.append((vertex(r, c), vertex(r, c + 1), vertex(r + 1, c)))
            face_edges.append((diagonal(r, c), vertical(r, c), horizontal(r, c)))
            faces.append((vertex(r, c + 1), vertex(r + 1, c + 1), vertex(r + 1, c)))
            face_edges.append((horizontal(r + 1, c), diagonal(r, c), vertical(r, c + 1)))
    return TriangulatedSurface(rows * cols, faces, face_edges, np.ones(3 * rows * cols))


def doubled_rhombus():
    '''Two copies of a rhombus with angles π/3 and 2π/3 glued along the boundary

    The long diagonal 0-2 (length √3) is used on the top copy, so the angles
    opposite it sum to 4π/3 and exactly one flip makes the mesh Delaunay.
    '''
    faces = [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)]
    lengths = {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0, (0, 3): 1.0, (1, 3): 1.0, (0, 2): np.sqrt(3.0)}
    return TriangulatedSurface.from_faces(4, faces, lengths)


MESHES = {
    "tetrahedron": tetrahedron,
    "octahedron": octahedron,
    "torus": flat_torus,
    "rhombus": doubled_rhombus,
}
