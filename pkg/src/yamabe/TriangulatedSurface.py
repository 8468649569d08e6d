"""
Closed triangulated surfaces stored intrinsically: faces are vertex triples and every
edge has an identifier, so two different edges may join the same pair of vertices (as
happens on small tori and after flips). face_edges[f, k] is the edge opposite corner k
of face f, and each edge knows the two (face, corner) sides it is seen from.

Mesh JSON: {"vertices": n, "faces": [[i, j, k], ...], "ref_lengths": {"i-j": l, ...}}

"""
import json
import os

import numpy as np

from ..utils.errors import ConfigError, DegenerateTriangle


class TriangulatedSurface:
    '''Intrinsic triangulation with reference edge lengths

    Args:
        n_vertices (int): number of vertices
        faces (array_like): (F, 3) vertex indices, consistently oriented
        face_edges (array_like): (F, 3) edge ids, entry k opposite corner k
        ref_lengths (array_like): reference length of every edge id
    Returns:
        TriangulatedSurface: An instance of the TriangulatedSurface class
    '''
    def __init__(self, n_vertices, faces, face_edges, ref_lengths):
        self.n_vertices = int(n_vertices)
        self.faces = np.array(faces, dtype=int).reshape(-1, 3)
        self.face_edges = np.array(face_edges, dtype=int).reshape(-1, 3)
        self.ref_lengths = np.array(ref_lengths, dtype=float).reshape(-1)
        if self.faces.shape != self.face_edges.shape:
            raise ValueError("faces and face_edges must have the same shape")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= self.n_vertices):
            raise ValueError("face refers to a vertex outside 0..n-1")
        self.rebuild_sides()
        check_triangles(self.ref_lengths[self.face_edges])

    @classmethod
    def from_faces(cls, n_vertices, faces, lengths):
        '''Build edge ids by pairing each directed edge i->j with its reverse j->i

        Args:
            n_vertices (int): number of vertices
            faces (list): vertex triples, consistently oriented
            lengths (dict): reference length per unordered vertex pair, keyed (i, j) or "i-j"
        Returns:
            TriangulatedSurface: the surface
        '''
        table = {}
        for key, value in lengths.items():
            i, j = (int(v) for v in key.split("-")) if isinstance(key, str) else key
            table[frozenset((i, j))] = float(value)
        faces = np.array(faces, dtype=int).reshape(-1, 3)
        open_edges = {}
        face_edges = np.full(faces.shape, -1)
        ref = []
        for f, face in enumerate(faces):
            for k in range(3):
                i, j = face[(k + 1) % 3], face[(k + 2) % 3]
                if (j, i) in open_edges:
                    edge = open_edges.pop((j, i))
                else:
                    if (i, j) in open_edges:
                        raise ValueError(f"directed edge {i}->{j} used twice, faces are not consistently oriented")
                    edge = len(ref)
                    pair = frozenset((int(i), int(j)))
                    if pair not in table:
                        raise ConfigError(f"no reference length for edge {i}-{j}")
                    ref.append(table[pair])
                    open_edges[(i, j)] = edge
                face_edges[f, k] = edge
        if open_edges:
            raise ValueError(f"surface is not closed, unmatched edges {sorted(open_edges)}")
        return cls(n_vertices, faces, face_edges, ref)

    def rebuild_sides(self):
        '''Recompute the (face, corner) sides of every edge'''
        sides = [[] for _ in range(self.n_edges)]
        for f in range(self.n_faces):
            for k in range(3):
                sides[self.face_edges[f, k]].append((f, k))
        for edge, seen in enumerate(sides):
            if len(seen) != 2:
                raise ValueError(f"edge {edge} borders {len(seen)} faces, a closed surface needs 2")
        self.edge_sides = sides
        self.edge_vertices = np.array([[self.faces[f, (k + 1) % 3], self.faces[f, (k + 2) % 3]]
                                       for f, k in (seen[0] for seen in sides)], dtype=int).reshape(-1, 2)
        self.side_faces = np.array([[f for f, _ in seen] for seen in sides], dtype=int).reshape(-1, 2)
        self.side_corners = np.array([[k for _, k in seen] for seen in sides], dtype=int).reshape(-1, 2)

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def n_edges(self):
        return self.ref_lengths.shape[0]

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def endpoints(self, edge):
        i, j = self.edge_vertices[edge]
        return int(i), int(j)

    def copy(self):
        return TriangulatedSurface(self.n_vertices, self.faces, self.face_edges, self.ref_lengths)

    def to_dict(self):
        '''Mesh JSON; only faithful when no two edges share their endpoints'''
        lengths = {}
        for edge in range(self.n_edges):
            i, j = sorted(self.endpoints(edge))
            lengths[f"{i}-{j}"] = float(self.ref_lengths[edge])
        return {"vertices": self.n_vertices, "faces": self.faces.tolist(), "ref_lengths": lengths}


def check_triangles(L, tol=0.0):
    '''Raise DegenerateTriangle unless every row of the (F, 3) length array is a triangle'''
    L = np.asarray(L, dtype=float)
    if L.size == 0:
        return
    slack = L.sum(axis=1, keepdims=True) - 2.0 * L
    if np.any(slack <= tol) or np.any(L <= 0.0):
        bad = int(np.argmin(slack.min(axis=1)))
        raise DegenerateTriangle(f"face {bad} with lengths {L[bad].tolist()} violates the triangle inequality")


def load_mesh(source):
    '''Load a mesh from a JSON path or a parsed payload'''
    if isinstance(source, dict):
        payload = source
    else:
        if not os.path.exists(source):
            raise ConfigError(f"mesh file not found: {source}")
        with open(source) as f:
            try:
                payload = json.load(f)
            except json.JSONDecodeError as err:
                raise ConfigError(f"{source}: {err}") from err
    try:
        return TriangulatedSurface.from_faces(payload["vertices"], payload["faces"], payload["ref_lengths"])
    except (KeyError, TypeError) as err:
        raise ConfigError(f"malformed mesh payload: {err}") from err
