#pragma once

#include <string>
#include <vector>

#include "chi/types.hpp"

namespace chi {

// Built-in gate library. Two-qubit matrices use the computational basis
// |00>, |01>, |10>, |11> with the leftmost qubit as the slow index, matching
// the Pauli label convention.
Matrix gate_identity(int n_qubits = 1);
Matrix gate_x();
Matrix gate_y();
Matrix gate_z();
Matrix gate_sqrt_x();  // exp(-i pi X / 4)
Matrix gate_sqrt_y();  // exp(-i pi Y / 4)
Matrix gate_hadamard();
Matrix gate_cz();
Matrix gate_cnot();        // control on the first qubit
Matrix gate_sqrt_iswap();  // exp(-i pi (XX + YY) / 8)
Matrix z_rotation(double phi);          // diag(1, e^{i phi})
Matrix controlled_phase(double theta);  // diag(1, 1, 1, e^{i theta})

// Name lookup used by the CLI: i, x, y, z, sx, sy, h, cz, cnot, sqiswap,
// zrot(angle), cphase(angle). Throws ValidationError for unknown names.
Matrix named_gate(const std::string& name, double angle = 0.0);
const std::vector<std::string>& named_gate_list();

}  // namespace chi
