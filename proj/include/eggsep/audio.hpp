#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eggsep/tensor.hpp"

namespace eggsep {

// ---- minimal RIFF/WAV, mono 16-bit PCM only ----

struct Wave {
    std::uint32_t sample_rate = 16000;
    std::vector<double> samples;  // in [-1, 1]
};

Wave load_wav(const std::string& path);
void save_wav(const Wave& w, const std::string& path);

// ---- radix-2 FFT ----

// In-place complex FFT; size must be a power of two. inverse divides by n.
void fft(std::vector<double>& re, std::vector<double>& im, bool inverse);

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

// ---- STFT ----
// magnitude/phase laid out [frames x (frame/2 + 1)]. istft uses weighted
// overlap-add with the same window; interior samples reconstruct exactly up
// to rounding.

struct Stft {
    Tensor magnitude;
    Tensor phase;
    std::size_t frame = 512;
    std::size_t hop = 256;
    std::size_t signal_length = 0;
};

Stft stft(const std::vector<double>& wave, std::size_t frame = 512, std::size_t hop = 256);
std::vector<double> istft(const Stft& spec);

}  // namespace eggsep
