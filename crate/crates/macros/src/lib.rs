//! Procedural macros for `offload-core`.
//!
//! Use them through the re-export `offload_core::task`; the generated code
//! refers to `::offload_core` paths.

use proc_macro::TokenStream;
use proc_macro2::{Span, TokenStream as TokenStream2};
use quote::{format_ident, quote, quote_spanned};
use syn::spanned::Spanned;
use syn::{parse_macro_input, FnArg, Ident, ItemFn, LitInt, Pat, ReturnType, Type};

#[derive(Default)]
struct TaskArgs {
    memory: Option<LitInt>,
    timeout: Option<LitInt>,
    ephemeral_storage: Option<LitInt>,
    ordinal: Option<LitInt>,
    name: Option<Ident>,
}

impl TaskArgs {
    fn parse(&mut self, meta: syn::meta::ParseNestedMeta) -> syn::Result<()> {
        let slot = if meta.path.is_ident("memory") {
            &mut self.memory
        } else if meta.path.is_ident("timeout") {
            &mut self.timeout
        } else if meta.path.is_ident("ephemeral_storage") {
            &mut self.ephemeral_storage
        } else if meta.path.is_ident("ordinal") {
            &mut self.ordinal
        } else if meta.path.is_ident("name") {
            self.name = Some(meta.value()?.parse()?);
            return Ok(());
        } else {
            return Err(meta.error(
                "unsupported task option; expected memory, timeout, ephemeral_storage, ordinal or name",
            ));
        };
        *slot = Some(meta.value()?.parse()?);
        Ok(())
    }
}

fn camel_case(ident: &Ident) -> Ident {
    let camel: String = ident
        .to_string()
        .split('_')
        .filter(|part| !part.is_empty())
        .map(|part| {
            let mut chars = part.chars();
            let first = chars.next().expect("non-empty").to_ascii_uppercase();
            std::iter::once(first).chain(chars).collect::<String>()
        })
        .collect();
    Ident::new(&camel, ident.span())
}

fn optional(lit: &Option<LitInt>) -> TokenStream2 {
    match lit {
        Some(lit) => quote!(::core::option::Option::Some(#lit)),
        None => quote!(::core::option::Option::None),
    }
}

/// If `ty` is spelled `Result<T, E>`, returns `T`.
fn result_ok_type(ty: &Type) -> Option<&Type> {
    let Type::Path(path) = ty else { return None };
    let last = path.path.segments.last()?;
    if last.ident != "Result" {
        return None;
    }
    let syn::PathArguments::AngleBracketed(args) = &last.arguments else { return None };
    match args.args.first()? {
        syn::GenericArgument::Type(ok) => Some(ok),
        _ => None,
    }
}

/// Turns a free function into an offloadable task.
///
/// The function is kept as written. Next to it the macro generates a struct
/// (the function name in CamelCase, or `name = ...`) whose fields are the
/// function parameters, captured by value in declaration order, plus an
/// implementation of `offload_core::codegen::Task` that:
///
/// * identifies the task by the attribute's source position and `ordinal`;
/// * serializes the captures in order for the host-side dispatch stub;
/// * deserializes them in the same order and calls the function on the
///   worker side.
///
/// Every parameter type must implement `Wire`; reference parameters are
/// rejected. A `Result<T, E>` return type offloads `T` and reports `E`
/// through its `Display` text.
///
/// Options: `memory` (MB), `timeout` (s), `ephemeral_storage` (MB),
/// `ordinal`, `name`.
#[proc_macro_attribute]
pub fn task(attr: TokenStream, item: TokenStream) -> TokenStream {
    let mut args = TaskArgs::default();
    let parser = syn::meta::parser(|meta| args.parse(meta));
    parse_macro_input!(attr with parser);
    let func = parse_macro_input!(item as ItemFn);
    match expand(args, func) {
        Ok(tokens) => tokens.into(),
        Err(err) => err.to_compile_error().into(),
    }
}

fn expand(args: TaskArgs, func: ItemFn) -> syn::Result<TokenStream2> {
    let sig = &func.sig;
    if let Some(asyncness) = &sig.asyncness {
        return Err(syn::Error::new(asyncness.span(), "offloaded tasks must be synchronous functions"));
    }
    if !sig.generics.params.is_empty() {
        return Err(syn::Error::new(sig.generics.span(), "offloaded tasks cannot be generic"));
    }

    let mut names = Vec::new();
    let mut types = Vec::new();
    for input in &sig.inputs {
        let typed = match input {
            FnArg::Receiver(recv) => {
                return Err(syn::Error::new(recv.span(), "offloaded tasks cannot take `self`"))
            }
            FnArg::Typed(typed) => typed,
        };
        let Pat::Ident(pat) = &*typed.pat else {
            return Err(syn::Error::new(typed.pat.span(), "task captures must be plain identifiers"));
        };
        if pat.by_ref.is_some() {
            return Err(syn::Error::new(pat.span(), "task captures are passed by value"));
        }
        if let Type::Reference(reference) = &*typed.ty {
            return Err(syn::Error::new(
                reference.span(),
                format!(
                    "capture `{}` is a reference; offloaded tasks capture by value only",
                    pat.ident
                ),
            ));
        }
        names.push(pat.ident.clone());
        types.push((*typed.ty).clone());
    }

    let fn_name = &sig.ident;
    let vis = &func.vis;
    let struct_name = args.name.clone().unwrap_or_else(|| camel_case(fn_name));
    let fn_name_str = fn_name.to_string();

    let (output, run_body) = match &sig.output {
        ReturnType::Default => (quote!(()), quote!({
            #fn_name(#(self.#names),*);
            ::core::result::Result::Ok(())
        })),
        ReturnType::Type(_, ty) => match result_ok_type(ty) {
            Some(ok) => (quote!(#ok), quote!({
                #fn_name(#(self.#names),*)
                    .map_err(|e| ::offload_core::codegen::TaskFailure::new(e.to_string()))
            })),
            None => (quote!(#ty), quote!(::core::result::Result::Ok(#fn_name(#(self.#names),*)))),
        },
    };

    let memory = optional(&args.memory);
    let timeout = optional(&args.timeout);
    let storage = optional(&args.ephemeral_storage);
    let ordinal = match &args.ordinal {
        Some(lit) => quote!(#lit),
        None => quote!(0),
    };

    let wire_checks = types.iter().map(|ty| {
        quote_spanned! {ty.span()=>
            __offload_assert_wire::<#ty>();
        }
    });
    let name_strs: Vec<String> = names.iter().map(ToString::to_string).collect();
    let doc = format!("Offloadable task generated from [`{fn_name_str}`].");
    let assert_fn = format_ident!("__offload_assert_wire");
    let site = Span::call_site();
    let file = quote_spanned!(site=> ::core::file!());
    let line = quote_spanned!(site=> ::core::line!());
    let column = quote_spanned!(site=> ::core::column!());

    Ok(quote! {
        #func

        #[doc = #doc]
        #[derive(Debug, Clone, PartialEq)]
        #vis struct #struct_name {
            #(pub #names: #types,)*
        }

        impl #struct_name {
            #[allow(clippy::too_many_arguments, clippy::new_without_default)]
            pub fn new(#(#names: #types),*) -> Self {
                Self { #(#names),* }
            }
        }

        const _: () = {
            #[allow(dead_code)]
            fn #assert_fn<T: ::offload_core::wireformat::Wire>() {}
            #[allow(dead_code)]
            fn __offload_check_captures() {
                #(#wire_checks)*
                #assert_fn::<#output>();
            }
        };

        impl ::offload_core::codegen::Task for #struct_name {
            type Output = #output;

            fn site() -> ::offload_core::codegen::TaskSite {
                ::offload_core::codegen::TaskSite {
                    function: #fn_name_str,
                    module_path: ::core::module_path!(),
                    source_file: #file,
                    line: #line,
                    column: #column,
                    ordinal: #ordinal,
                    config: ::offload_core::codegen::ConfigOverrides {
                        memory: #memory,
                        timeout: #timeout,
                        ephemeral_storage: #storage,
                    },
                }
            }

            fn captured_fields() -> ::std::vec::Vec<::offload_core::wireformat::Field> {
                ::std::vec![
                    #(::offload_core::wireformat::Field::new(
                        #name_strs,
                        <#types as ::offload_core::wireformat::Wire>::schema(),
                    )),*
                ]
            }

            fn encode_captures(&self, out: &mut ::std::vec::Vec<u8>) {
                #(<#types as ::offload_core::wireformat::Wire>::encode(&self.#names, out);)*
                let _ = out;
            }

            fn decode_captures(
                reader: &mut ::offload_core::wireformat::Reader<'_>,
            ) -> ::core::result::Result<Self, ::offload_core::wireformat::DecodeError> {
                let _ = &reader;
                ::core::result::Result::Ok(Self {
                    #(#names: <#types as ::offload_core::wireformat::Wire>::decode(reader)?,)*
                })
            }

            fn run(self) -> ::core::result::Result<#output, ::offload_core::codegen::TaskFailure> {
                #run_body
            }
        }
    })
}
