#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>

#include <openssl/evp.h>

#include "prefgen/common.hpp"

namespace prefgen {

namespace hashdetail {

struct EvpCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using EvpCtx = std::unique_ptr<EVP_MD_CTX, EvpCtxDeleter>;

inline EvpCtx make_sha256_ctx() {
  EvpCtx ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("sha256: cannot initialize digest context");
  return ctx;
}

inline std::string finish_hex(EvpCtx& ctx) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("sha256: digest finalization failed");
  static const char* hex = "0123456789abcdef";
  std::string out(std::size_t(len) * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[std::size_t(i) * 2] = hex[digest[i] >> 4];
    out[std::size_t(i) * 2 + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace hashdetail

inline std::string sha256_hex(const void* data, std::size_t n) {
  auto ctx = hashdetail::make_sha256_ctx();
  if (n > 0 && EVP_DigestUpdate(ctx.get(), data, n) != 1)
    throw Error("sha256: digest update failed");
  return hashdetail::finish_hex(ctx);
}

inline std::string sha256_hex(const std::string& data) {
  return sha256_hex(data.data(), data.size());
}

// Streaming file hash; 64 KiB chunks keep memory flat on large artifacts.
inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("sha256_file: cannot open " + path);
  auto ctx = hashdetail::make_sha256_ctx();
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf, std::size_t(got)) != 1)
      throw Error("sha256: digest update failed");
  }
  if (in.bad()) throw DataError("sha256_file: read failure on " + path);
  return hashdetail::finish_hex(ctx);
}

}  // namespace prefgen
