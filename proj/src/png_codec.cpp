// Copyright 2026 The TerraSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "terraseg/png_codec.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include "terraseg/error.hpp"

namespace terraseg {
namespace {

// libpng reports failures via longjmp. Every object that must survive the jump
// lives in these context structs, outside the frame that calls setjmp.
struct ReadContext {
  std::span<const std::uint8_t> input;
  std::size_t cursor = 0;
  PngPixels out;
  std::vector<png_bytep> rows;
  char message[256] = {0};
};

struct WriteContext {
  const PngPixels* in = nullptr;
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows;
  char message[256] = {0};
};

template <typename Context>
void on_error(png_structp png, png_const_charp msg) {
  auto* ctx = static_cast<Context*>(png_get_error_ptr(png));
  std::snprintf(ctx->message, sizeof(ctx->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void read_bytes(png_structp png, png_bytep dst, png_size_t length) {
  auto* ctx = static_cast<ReadContext*>(png_get_io_ptr(png));
  if (ctx->cursor + length > ctx->input.size()) {
    png_error(png, "unexpected end of data");
  }
  std::memcpy(dst, ctx->input.data() + ctx->cursor, length);
  ctx->cursor += length;
}

void write_bytes(png_structp png, png_bytep src, png_size_t length) {
  auto* ctx = static_cast<WriteContext*>(png_get_io_ptr(png));
  ctx->out.insert(ctx->out.end(), src, src + length);
}

void flush_noop(png_structp) {}

bool read_impl(ReadContext* ctx) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, ctx,
                                           on_error<ReadContext>, on_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, ctx, read_bytes);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  ctx->out.was_palette = color_type == PNG_COLOR_TYPE_PALETTE;
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  ctx->out.width = static_cast<int>(png_get_image_width(png, info));
  ctx->out.height = static_cast<int>(png_get_image_height(png, info));
  ctx->out.channels = png_get_channels(png, info);
  ctx->out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  if (row_bytes != ctx->out.row_bytes()) png_error(png, "unsupported pixel layout");
  ctx->out.data.resize(row_bytes * ctx->out.height);
  ctx->rows.resize(ctx->out.height);
  for (int y = 0; y < ctx->out.height; ++y) {
    ctx->rows[y] = ctx->out.data.data() + row_bytes * y;
  }
  png_read_image(png, ctx->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool write_impl(WriteContext* ctx) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, ctx,
                                            on_error<WriteContext>, on_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  const PngPixels& in = *ctx->in;
  int color_type = PNG_COLOR_TYPE_GRAY;
  if (in.channels == 3) color_type = PNG_COLOR_TYPE_RGB;
  if (in.channels == 4) color_type = PNG_COLOR_TYPE_RGB_ALPHA;
  png_set_write_fn(png, ctx, write_bytes, flush_noop);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, in.width, in.height, in.bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  ctx->rows.resize(in.height);
  const std::size_t row_bytes = in.row_bytes();
  for (int y = 0; y < in.height; ++y) {
    ctx->rows[y] = const_cast<png_bytep>(in.data.data() + row_bytes * y);
  }
  png_write_image(png, ctx->rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

PngPixels decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::kCorruptPng, "missing PNG signature");
  }
  ReadContext ctx;
  ctx.input = bytes;
  if (!read_impl(&ctx)) {
    throw Error(ErrorCode::kCorruptPng, ctx.message[0] ? ctx.message : "decode failed");
  }
  return std::move(ctx.out);
}

std::vector<std::uint8_t> encode_png(const PngPixels& pixels) {
  if (pixels.width <= 0 || pixels.height <= 0 ||
      (pixels.channels != 1 && pixels.channels != 3 && pixels.channels != 4) ||
      (pixels.bit_depth != 8 && pixels.bit_depth != 16) ||
      pixels.data.size() != pixels.row_bytes() * pixels.height) {
    throw Error(ErrorCode::kInvalidArgument, "invalid PNG pixel buffer");
  }
  WriteContext ctx;
  ctx.in = &pixels;
  if (!write_impl(&ctx)) {
    throw Error(ErrorCode::kIo, std::string("PNG encode failed: ") + ctx.message);
  }
  return std::move(ctx.out);
}

}  // namespace terraseg
