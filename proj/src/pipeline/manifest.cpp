#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "cpl/error.hpp"
#include "cpl/pipeline.hpp"

namespace cpl {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& relative_paths) {
  Json arts = Json::array();
  for (const auto& rel : relative_paths) {
    const auto p = dir / rel;
    arts.push_back(Json{{"path", rel}, {"bytes", std::filesystem::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  write_file(dir / "manifest.json", Json{{"artifacts", arts}}.dump(2) + "\n");
}

std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
  const Json j = Json::parse(read_file(dir / "manifest.json"));
  std::vector<std::string> bad;
  for (const auto& a : j.at("artifacts")) {
    const auto rel = a.at("path").get<std::string>();
    const auto p = dir / rel;
    if (!std::filesystem::exists(p) || sha256_file(p) != a.at("sha256").get<std::string>()) bad.push_back(rel);
  }
  return bad;
}

}  // namespace cpl
