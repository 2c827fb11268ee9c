#pragma once

#include <vector>

#include "propnet/geometry.hpp"
#include "propnet/random.hpp"
#include "propnet/tensor.hpp"

namespace propnet {

// 98-point face laid out like the WFLW scheme (contour, brows, nose, eyes,
// outer and inner lips, pupils), left-right symmetric before jitter. Used
// for self-tests and the toy descent; not a face model.
std::vector<Point> face_template_98();

// Template placed in a frame_size x frame_size frame with random centre,
// size, in-plane rotation and per-point jitter. All points stay inside the
// frame. Each attribute bit is set with probability attribute_prob.
LandmarkSet synthetic_face(Rng& rng, int frame_size = 256, double attribute_prob = 0.25);

// Uniform noise in [-1, 1] smoothed by a circular Gaussian of the given
// sigma, per channel.
Tensor3 lowpass_noise(Rng& rng, int channels, int height, int width, double sigma);

}  // namespace propnet
