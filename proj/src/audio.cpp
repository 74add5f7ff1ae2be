#include "eggsep/audio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace eggsep {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void put_u32le(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

void put_u16le(std::ostream& os, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    os.write(b, 2);
}

std::uint32_t get_u32le(std::istream& is, const std::string& path) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("WAV: truncated file " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t get_u16le(std::istream& is, const std::string& path) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    if (!is) throw std::runtime_error("WAV: truncated file " + path);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace

Wave load_wav(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char tag[4];
    is.read(tag, 4);
    if (!is || std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error("WAV: not a RIFF file: " + path);
    get_u32le(is, path);  // riff size
    is.read(tag, 4);
    if (!is || std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error("WAV: not a WAVE file: " + path);

    Wave w;
    bool have_fmt = false;
    while (is.read(tag, 4)) {
        const std::uint32_t chunk_size = get_u32le(is, path);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            const std::uint16_t format = get_u16le(is, path);
            const std::uint16_t channels = get_u16le(is, path);
            w.sample_rate = get_u32le(is, path);
            get_u32le(is, path);  // byte rate
            get_u16le(is, path);  // block align
            const std::uint16_t bits = get_u16le(is, path);
            if (format != 1) throw std::runtime_error("WAV: only PCM supported: " + path);
            if (channels != 1) throw std::runtime_error("WAV: only mono supported: " + path);
            if (bits != 16) throw std::runtime_error("WAV: only 16-bit supported: " + path);
            if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw std::runtime_error("WAV: data chunk before fmt in " + path);
            const std::size_t count = chunk_size / 2;
            w.samples.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::uint16_t u = get_u16le(is, path);
                w.samples[i] = static_cast<double>(static_cast<std::int16_t>(u)) / 32767.0;
            }
            return w;
        } else {
            is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
        }
    }
    throw std::runtime_error("WAV: no data chunk in " + path);
}

void save_wav(const Wave& w, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
    os.write("RIFF", 4);
    put_u32le(os, 36 + data_bytes);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    put_u32le(os, 16);
    put_u16le(os, 1);  // PCM
    put_u16le(os, 1);  // mono
    put_u32le(os, w.sample_rate);
    put_u32le(os, w.sample_rate * 2);
    put_u16le(os, 2);
    put_u16le(os, 16);
    os.write("data", 4);
    put_u32le(os, data_bytes);
    for (double v : w.samples) {
        const double clamped = std::min(1.0, std::max(-1.0, v));
        const auto s = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        put_u16le(os, static_cast<std::uint16_t>(s));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

void fft(std::vector<double>& re, std::vector<double>& im, bool inverse) {
    const std::size_t n = re.size();
    if (n != im.size()) throw std::invalid_argument("fft: real/imag length mismatch");
    if (!is_pow2(n)) throw std::invalid_argument("fft: length must be a power of two");

    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::size_t a = i + k, b = i + k + len / 2;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
    if (inverse) {
        for (std::size_t i = 0; i < n; ++i) {
            re[i] /= static_cast<double>(n);
            im[i] /= static_cast<double>(n);
        }
    }
}

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

Stft stft(const std::vector<double>& wave, std::size_t frame, std::size_t hop) {
    if (!is_pow2(frame)) throw std::invalid_argument("stft: frame must be a power of two");
    if (hop == 0 || hop > frame) throw std::invalid_argument("stft: hop must be in [1, frame]");
    if (wave.size() < frame) throw std::invalid_argument("stft: signal shorter than one frame");

    const std::size_t n_frames = 1 + (wave.size() - frame) / hop;
    const std::size_t n_bins = frame / 2 + 1;
    const std::vector<double> win = hann_window(frame);

    Stft out;
    out.frame = frame;
    out.hop = hop;
    out.signal_length = wave.size();
    out.magnitude = Tensor({n_frames, n_bins});
    out.phase = Tensor({n_frames, n_bins});

    std::vector<double> re(frame), im(frame);
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t i = 0; i < frame; ++i) {
            re[i] = wave[f * hop + i] * win[i];
            im[i] = 0.0;
        }
        fft(re, im, false);
        for (std::size_t k = 0; k < n_bins; ++k) {
            out.magnitude.data[f * n_bins + k] = std::hypot(re[k], im[k]);
            out.phase.data[f * n_bins + k] = std::atan2(im[k], re[k]);
        }
    }
    return out;
}

std::vector<double> istft(const Stft& spec) {
    const std::size_t frame = spec.frame, hop = spec.hop;
    if (!is_pow2(frame)) throw std::invalid_argument("istft: frame must be a power of two");
    const std::size_t n_bins = frame / 2 + 1;
    if (spec.magnitude.rank() != 2 || spec.magnitude.cols() != n_bins ||
        !spec.magnitude.same_shape(spec.phase))
        throw std::invalid_argument("istft: magnitude/phase must be [frames x frame/2+1]");

    const std::size_t n_frames = spec.magnitude.rows();
    const std::size_t length = spec.signal_length ? spec.signal_length : (n_frames - 1) * hop + frame;
    const std::vector<double> win = hann_window(frame);

    std::vector<double> acc(length, 0.0), norm(length, 0.0);
    std::vector<double> re(frame), im(frame);
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double mag = spec.magnitude.data[f * n_bins + k];
            const double ph = spec.phase.data[f * n_bins + k];
            re[k] = mag * std::cos(ph);
            im[k] = mag * std::sin(ph);
        }
        for (std::size_t k = n_bins; k < frame; ++k) {  // conjugate symmetry
            re[k] = re[frame - k];
            im[k] = -im[frame - k];
        }
        fft(re, im, true);
        for (std::size_t i = 0; i < frame; ++i) {
            const std::size_t pos = f * hop + i;
            if (pos >= length) break;
            acc[pos] += re[i] * win[i];
            norm[pos] += win[i] * win[i];
        }
    }
    for (std::size_t i = 0; i < length; ++i)
        if (norm[i] > 1e-12) acc[i] /= norm[i];
    return acc;
}

}  // namespace eggsep
